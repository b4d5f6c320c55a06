#include "fmgspo/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>

#include "fmgspo/errors.hpp"
#include "fmgspo/seeding.hpp"

namespace fmgspo {

std::string to_string(ModelKind kind) { return kind == ModelKind::gamnet ? "gamnet" : "mlp"; }

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "gamnet") return ModelKind::gamnet;
  if (s == "mlp") return ModelKind::mlp;
  throw ConfigError("unknown model kind '" + s + "'");
}

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate < 10.0)) throw ConfigError("learning_rate must be in (0, 10)");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (hidden_width < 1) throw ConfigError("hidden_width must be >= 1");
  if (!(sensor_dropout >= 0.0 && sensor_dropout < 1.0)) throw ConfigError("sensor_dropout must be in [0, 1)");
}

ModelKind kind_of(const Model& model) {
  return std::holds_alternative<GamNetParams<double>>(model) ? ModelKind::gamnet : ModelKind::mlp;
}

double cross_entropy(const VectorXd& probs, int label) {
  if (label < 0 || label >= probs.size()) {
    throw InputError("label " + std::to_string(label) + " outside [0, " + std::to_string(probs.size()) + ")");
  }
  return -std::log(probs[label] + kLossFloor);
}

namespace {

// d loss / d logits for -log(p_y + eps) with p = softmax(logits).
VectorXd logit_gradient(const VectorXd& probs, int label) {
  const double py = probs[label];
  VectorXd g = probs;
  g[label] -= 1.0;
  return g * (py / (py + kLossFloor));
}

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (int c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return best;
}

struct BatchOutput {
  MatrixXd logits;  // B x C
  double loss_sum = 0.0;
};

// Batched GAM-Net evaluation. Mean-pooling after the second propagation is
// folded into a fixed per-sensor weight: mean_rows(Â R W1) = (1ᵀÂ/N) R W1.
class GamNetEngine {
 public:
  GamNetEngine(const WindowedDataset& ds, const MatrixXd& a_hat) : ds_(ds), a_hat_(a_hat) {
    const int n = ds.node_count();
    if (a_hat.rows() != n || a_hat.cols() != n) {
      throw ShapeError("adjacency is " + std::to_string(a_hat.rows()) + "x" + std::to_string(a_hat.cols()) +
                       " but dataset has " + std::to_string(n) + " sensors");
    }
    propagated_.reserve(ds.signals().size());
    for (const auto& s : ds.signals()) propagated_.push_back(a_hat * s);
    pool_ = a_hat.colwise().sum() / static_cast<double>(n);
  }

  // keep: optional B x N sensor weights applied to the inputs before propagation.
  BatchOutput run(const GamNetParams<double>& p, std::span<const std::size_t> batch, GamNetParams<double>* grad,
                  const MatrixXd* keep = nullptr) {
    const Eigen::Index n = ds_.node_count();
    const Eigen::Index f = ds_.feature_len();
    const auto b_count = static_cast<Eigen::Index>(batch.size());
    if (p.w0.rows() != f) {
      throw ShapeError("model expects " + std::to_string(p.w0.rows()) + " features per sensor, dataset has " +
                       std::to_string(f));
    }
    if (p.w1.cols() != ds_.class_count()) {
      throw ShapeError("model has " + std::to_string(p.w1.cols()) + " classes, dataset has " +
                       std::to_string(ds_.class_count()));
    }

    xb_.resize(b_count * n, f);
    for (Eigen::Index b = 0; b < b_count; ++b) {
      const auto& w = ds_.ref(batch[b]);
      if (keep) {
        xb_.middleRows(b * n, n).noalias() = (a_hat_ * keep->row(b).asDiagonal()) * ds_.features(batch[b]);
      } else {
        xb_.middleRows(b * n, n) = propagated_[w.recording].middleCols(w.start, f);
      }
    }
    pre_.noalias() = xb_ * p.w0;
    act_ = relu(pre_);
    pooled_.resize(b_count, p.w0.cols());
    for (Eigen::Index b = 0; b < b_count; ++b) pooled_.row(b).noalias() = pool_ * act_.middleRows(b * n, n);

    BatchOutput out;
    out.logits.noalias() = pooled_ * p.w1;
    if (!grad) return out;

    MatrixXd g(b_count, out.logits.cols());
    for (Eigen::Index b = 0; b < b_count; ++b) {
      const int y = ds_.label(batch[b]);
      const VectorXd probs = softmax(out.logits.row(b).transpose());
      out.loss_sum += cross_entropy(probs, y);
      g.row(b) = logit_gradient(probs, y).transpose() / static_cast<double>(b_count);
    }
    grad->w1.noalias() = pooled_.transpose() * g;
    const MatrixXd d_pooled = g * p.w1.transpose();
    d_pre_.resize(act_.rows(), act_.cols());
    for (Eigen::Index b = 0; b < b_count; ++b) {
      d_pre_.middleRows(b * n, n).noalias() = pool_.transpose() * d_pooled.row(b);
    }
    d_pre_ = (pre_.array() > 0.0).select(d_pre_, 0.0);
    grad->w0.noalias() = xb_.transpose() * d_pre_;
    return out;
  }

 private:
  const WindowedDataset& ds_;
  MatrixXd a_hat_;
  std::vector<MatrixXd> propagated_;
  Eigen::RowVectorXd pool_;
  MatrixXd xb_, pre_, act_, pooled_, d_pre_;
};

class MlpEngine {
 public:
  explicit MlpEngine(const WindowedDataset& ds) : ds_(ds) {}

  BatchOutput run(const MlpParams<double>& p, std::span<const std::size_t> batch, MlpParams<double>* grad,
                  const MatrixXd* keep = nullptr) {
    const Eigen::Index n = ds_.node_count();
    const Eigen::Index f = ds_.feature_len();
    const auto b_count = static_cast<Eigen::Index>(batch.size());
    if (p.w0.rows() != n * f) {
      throw ShapeError("model expects " + std::to_string(p.w0.rows()) + " inputs, dataset windows have " +
                       std::to_string(n * f));
    }
    if (p.w1.cols() != ds_.class_count()) {
      throw ShapeError("model has " + std::to_string(p.w1.cols()) + " classes, dataset has " +
                       std::to_string(ds_.class_count()));
    }

    xb_.resize(b_count, n * f);
    for (Eigen::Index b = 0; b < b_count; ++b) {
      window_ = ds_.features(batch[b]);
      if (keep) window_ = keep->row(b).transpose().asDiagonal() * window_;
      xb_.row(b) = window_.reshaped<Eigen::RowMajor>().transpose();
    }
    pre_.noalias() = xb_ * p.w0;
    pre_.rowwise() += p.b0.transpose();
    act_ = relu(pre_);

    BatchOutput out;
    out.logits.noalias() = act_ * p.w1;
    out.logits.rowwise() += p.b1.transpose();
    if (!grad) return out;

    MatrixXd g(b_count, out.logits.cols());
    for (Eigen::Index b = 0; b < b_count; ++b) {
      const int y = ds_.label(batch[b]);
      const VectorXd probs = softmax(out.logits.row(b).transpose());
      out.loss_sum += cross_entropy(probs, y);
      g.row(b) = logit_gradient(probs, y).transpose() / static_cast<double>(b_count);
    }
    grad->w1.noalias() = act_.transpose() * g;
    grad->b1 = g.colwise().sum().transpose();
    MatrixXd d_pre = g * p.w1.transpose();
    d_pre = (pre_.array() > 0.0).select(d_pre, 0.0);
    grad->w0.noalias() = xb_.transpose() * d_pre;
    grad->b0 = d_pre.colwise().sum().transpose();
    return out;
  }

 private:
  const WindowedDataset& ds_;
  MatrixXd window_, xb_, pre_, act_;
};

constexpr std::size_t kEvalChunk = 512;

template <typename Engine, typename Params>
MatrixXd all_logits(Engine& engine, const Params& p, std::size_t count, Eigen::Index classes) {
  MatrixXd logits(static_cast<Eigen::Index>(count), classes);
  std::vector<std::size_t> chunk;
  for (std::size_t begin = 0; begin < count; begin += kEvalChunk) {
    const std::size_t end = std::min(count, begin + kEvalChunk);
    chunk.resize(end - begin);
    std::iota(chunk.begin(), chunk.end(), begin);
    logits.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) =
        engine.run(p, chunk, nullptr).logits;
  }
  return logits;
}

template <typename Engine, typename Params>
std::vector<double> descend(Engine& engine, Params& params, std::size_t sample_count, Eigen::Index node_count,
                            const TrainConfig& cfg) {
  std::vector<std::size_t> order(sample_count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, {2}));
  Rng drop_rng(derive_seed(cfg.seed, {3}));
  MatrixXd keep;
  Params grad;
  std::vector<double> curve;
  curve.reserve(cfg.epochs);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_in_place(order, rng);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < sample_count; begin += batch) {
      const std::size_t end = std::min(sample_count, begin + batch);
      const MatrixXd* mask = nullptr;
      if (cfg.sensor_dropout > 0.0) {
        keep.resize(static_cast<Eigen::Index>(end - begin), node_count);
        for (Eigen::Index b = 0; b < keep.rows(); ++b) {
          for (Eigen::Index i = 0; i < node_count; ++i) {
            keep(b, i) = uniform01(drop_rng) < cfg.sensor_dropout ? 0.0 : 1.0;
          }
        }
        mask = &keep;
      }
      const auto out =
          engine.run(params, std::span<const std::size_t>(order).subspan(begin, end - begin), &grad, mask);
      if (!std::isfinite(out.loss_sum)) {
        throw DivergenceError(epoch, "training diverged at epoch " + std::to_string(epoch));
      }
      loss_sum += out.loss_sum;
      params.w0 -= cfg.learning_rate * grad.w0;
      params.w1 -= cfg.learning_rate * grad.w1;
      if constexpr (std::is_same_v<Params, MlpParams<double>>) {
        params.b0 -= cfg.learning_rate * grad.b0;
        params.b1 -= cfg.learning_rate * grad.b1;
      }
    }
    const double mean_loss = loss_sum / static_cast<double>(sample_count);
    if (!std::isfinite(mean_loss) || !params.w0.allFinite() || !params.w1.allFinite()) {
      throw DivergenceError(epoch, "training diverged at epoch " + std::to_string(epoch));
    }
    curve.push_back(mean_loss);
  }
  return curve;
}

}  // namespace

GamNetGradients gamnet_gradients(const GamNetParams<double>& p, const MatrixXd& x, const MatrixXd& a_hat,
                                 int label) {
  detail::check_gamnet_shapes(p, x, a_hat);
  const auto n = static_cast<double>(x.rows());
  const MatrixXd ax = a_hat * x;
  const MatrixXd pre = ax * p.w0;
  const MatrixXd act = relu(pre);
  const MatrixXd prop = a_hat * act;
  const MatrixXd node_logits = prop * p.w1;
  const VectorXd probs = softmax(node_logits.colwise().mean().transpose());

  GamNetGradients out;
  out.loss = cross_entropy(probs, label);
  const VectorXd g = logit_gradient(probs, label);
  const MatrixXd d_node = VectorXd::Constant(x.rows(), 1.0 / n) * g.transpose();  // N x C
  out.dw1 = prop.transpose() * d_node;
  const MatrixXd d_act = a_hat.transpose() * (d_node * p.w1.transpose());
  const MatrixXd d_pre = (pre.array() > 0.0).select(d_act, 0.0);
  out.dw0 = ax.transpose() * d_pre;
  return out;
}

MlpGradients mlp_gradients(const MlpParams<double>& p, const MatrixXd& x, int label) {
  const VectorXd flat = x.reshaped<Eigen::RowMajor>();
  if (flat.size() != p.w0.rows()) throw ShapeError("mlp input length mismatch");
  const VectorXd pre = p.w0.transpose() * flat + p.b0;
  const VectorXd act = relu(pre);
  const VectorXd probs = softmax(p.w1.transpose() * act + p.b1);

  MlpGradients out;
  out.loss = cross_entropy(probs, label);
  const VectorXd g = logit_gradient(probs, label);
  out.dw1 = act * g.transpose();
  out.db1 = g;
  const VectorXd d_pre = (pre.array() > 0.0).select(p.w1 * g, 0.0);
  out.dw0 = flat * d_pre.transpose();
  out.db0 = d_pre;
  return out;
}

GamNetGradients gamnet_batch_gradients(const GamNetParams<double>& p, const WindowedDataset& ds,
                                       const MatrixXd& a_hat, const std::vector<std::size_t>& batch) {
  GamNetEngine engine(ds, a_hat);
  GamNetParams<double> grad;
  const auto out = engine.run(p, batch, &grad);
  return {grad.w0, grad.w1, out.loss_sum / static_cast<double>(batch.size())};
}

TrainResult train(const WindowedDataset& ds, const MatrixXd& a_hat, const TrainConfig& cfg) {
  cfg.validate();
  if (ds.empty()) throw InputError("cannot train on an empty dataset");
  if (ds.class_count() < 2) throw InputError("training needs at least 2 classes");

  const std::uint64_t init_seed = derive_seed(cfg.seed, {1});
  if (cfg.model_kind == ModelKind::gamnet) {
    auto params = init_gamnet(ds.feature_len(), cfg.hidden_width, ds.class_count(), init_seed);
    GamNetEngine engine(ds, a_hat);
    auto curve = descend(engine, params, ds.size(), ds.node_count(), cfg);
    return {std::move(params), std::move(curve)};
  }
  auto params = init_mlp(static_cast<Eigen::Index>(ds.node_count()) * ds.feature_len(), cfg.hidden_width,
                         ds.class_count(), init_seed);
  MlpEngine engine(ds);
  auto curve = descend(engine, params, ds.size(), ds.node_count(), cfg);
  return {std::move(params), std::move(curve)};
}

MatrixXd predict_logits(const Model& model, const WindowedDataset& ds, const MatrixXd& a_hat) {
  if (const auto* g = std::get_if<GamNetParams<double>>(&model)) {
    GamNetEngine engine(ds, a_hat);
    return all_logits(engine, *g, ds.size(), g->class_count());
  }
  const auto& m = std::get<MlpParams<double>>(model);
  MlpEngine engine(ds);
  return all_logits(engine, m, ds.size(), m.class_count());
}

std::vector<int> predict(const Model& model, const WindowedDataset& ds, const MatrixXd& a_hat) {
  const MatrixXd logits = predict_logits(model, ds, a_hat);
  std::vector<int> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = argmax_lowest(logits.row(static_cast<Eigen::Index>(i)));
  return out;
}

EvalReport make_report(const std::vector<int>& truth, const std::vector<int>& predicted, int class_count) {
  if (truth.size() != predicted.size()) throw InputError("truth/prediction length mismatch");
  EvalReport r;
  r.sample_count = truth.size();
  r.confusion = ConfusionMatrix::Zero(class_count, class_count);
  for (std::size_t i = 0; i < truth.size(); ++i) ++r.confusion(truth[i], predicted[i]);
  r.accuracy = r.sample_count == 0
                   ? 0.0
                   : static_cast<double>(r.confusion.trace()) / static_cast<double>(r.sample_count);
  r.per_class_recall.resize(class_count);
  for (int c = 0; c < class_count; ++c) {
    const long row = r.confusion.row(c).sum();
    r.per_class_recall[c] = row == 0 ? std::numeric_limits<double>::quiet_NaN()
                                     : static_cast<double>(r.confusion(c, c)) / static_cast<double>(row);
  }
  return r;
}

EvalReport evaluate(const Model& model, const WindowedDataset& ds, const MatrixXd& a_hat) {
  if (ds.empty()) throw InputError("cannot evaluate on an empty dataset");
  const auto start = std::chrono::steady_clock::now();
  const auto predicted = predict(model, ds, a_hat);
  auto report = make_report(ds.labels(), predicted, ds.class_count());
  report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

MeanSd mean_sd(const std::vector<double>& values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

CvReport cross_validate(const WindowedDataset& ds, const MatrixXd& a_hat, const TrainConfig& cfg, int k) {
  CvReport report;
  report.plan = split_folds(ds, k, derive_seed(cfg.seed, {10}));
  for (int fold = 0; fold < k; ++fold) {
    const auto train_idx = report.plan.complement(fold);
    const auto test_idx = report.plan.members(fold);
    TrainConfig fold_cfg = cfg;
    fold_cfg.seed = derive_seed(cfg.seed, {11, static_cast<std::uint64_t>(fold)});
    try {
      const auto trained = train(ds.subset(train_idx), a_hat, fold_cfg);
      report.fold_accuracies.push_back(evaluate(trained.params, ds.subset(test_idx), a_hat).accuracy);
    } catch (const DivergenceError& e) {
      throw DivergenceError(e.epoch(), "fold " + std::to_string(fold) + ": " + e.what());
    } catch (const Error& e) {
      throw Error("fold " + std::to_string(fold) + ": " + e.what());
    }
  }
  const auto stats = mean_sd(report.fold_accuracies);
  report.mean = stats.mean;
  report.sd = stats.sd;
  return report;
}

RepeatedCvReport repeated_cross_validate(const WindowedDataset& ds, const MatrixXd& a_hat, const TrainConfig& cfg,
                                         int k, int repeats) {
  if (repeats < 1) throw ConfigError("repeats must be >= 1");
  RepeatedCvReport out;
  std::vector<double> means;
  for (int r = 0; r < repeats; ++r) {
    TrainConfig run_cfg = cfg;
    run_cfg.seed = derive_seed(cfg.seed, {20, static_cast<std::uint64_t>(r)});
    out.runs.push_back(cross_validate(ds, a_hat, run_cfg, k));
    means.push_back(out.runs.back().mean);
  }
  const auto stats = mean_sd(means);
  out.mean = stats.mean;
  out.sd = stats.sd;
  return out;
}

}  // namespace fmgspo
