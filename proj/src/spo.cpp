#include "fmgspo/spo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fmgspo/armband_graph.hpp"
#include "fmgspo/errors.hpp"
#include "fmgspo/parallel.hpp"
#include "fmgspo/seeding.hpp"

namespace fmgspo {

namespace {

// Edge pattern of a normalized adjacency, restricted to the kept sensors and
// renormalized.
MatrixXd restrict_adjacency(const MatrixXd& a_hat, const SelectionVector& keep) {
  const auto rows = keep.indices();
  MatrixXd a = (a_hat(rows, rows).array() != 0.0).cast<double>();
  a.diagonal().setZero();
  return normalize_adjacency(a);
}

void check_k(int node_count, int k) {
  if (k < 1 || k >= node_count) {
    throw SelectionError("target size k=" + std::to_string(k) + " must lie in [1, " +
                         std::to_string(node_count - 1) + "]");
  }
}

SubsetScore score_of(const Quantifier& q) {
  return [&q](const SelectionVector& s) { return q(s); };
}

}  // namespace

std::string to_string(EvalPolicy policy) {
  return policy == EvalPolicy::retrain ? "retrain" : "mask_only";
}

EvalPolicy eval_policy_from_string(const std::string& s) {
  if (s == "retrain") return EvalPolicy::retrain;
  if (s == "mask_only") return EvalPolicy::mask_only;
  throw ConfigError("unknown evaluation policy '" + s + "'");
}

std::string to_string(MaskingMode mode) {
  return mode == MaskingMode::zero_features ? "zero_features" : "remove_nodes";
}

MaskingMode masking_mode_from_string(const std::string& s) {
  if (s == "zero_features") return MaskingMode::zero_features;
  if (s == "remove_nodes") return MaskingMode::remove_nodes;
  throw ConfigError("unknown masking mode '" + s + "'");
}

void QuantifierConfig::validate() const {
  if (!(inner_train_fraction > 0.0 && inner_train_fraction < 1.0)) {
    throw ConfigError("inner_train_fraction must lie in (0, 1)");
  }
  train_cfg.validate();
}

Quantifier::Quantifier(const WindowedDataset& ds, MatrixXd a_hat, QuantifierConfig cfg)
    : cfg_(std::move(cfg)), a_hat_(std::move(a_hat)), node_count_(ds.node_count()) {
  cfg_.validate();
  if (a_hat_.rows() != node_count_ || a_hat_.cols() != node_count_) {
    throw ShapeError("adjacency is " + std::to_string(a_hat_.rows()) + "x" + std::to_string(a_hat_.cols()) +
                     " but the dataset has " + std::to_string(node_count_) + " sensors");
  }
  std::tie(train_, validation_) = holdout_split(ds, cfg_.inner_train_fraction, cfg_.inner_split_seed);
  if (cfg_.eval_policy == EvalPolicy::mask_only) reference_ = train(train_, a_hat_, cfg_.train_cfg).params;
  if (reference_ && cfg_.masking == MaskingMode::remove_nodes && kind_of(*reference_) != ModelKind::gamnet) {
    throw ConfigError("node removal with a fixed model needs a graph model");
  }
}

Quantifier::Quantifier(const WindowedDataset& ds, MatrixXd a_hat, QuantifierConfig cfg, Model pretrained)
    : cfg_(std::move(cfg)), a_hat_(std::move(a_hat)), node_count_(ds.node_count()) {
  cfg_.validate();
  if (cfg_.eval_policy != EvalPolicy::mask_only) throw ConfigError("a pretrained model needs the mask_only policy");
  if (a_hat_.rows() != node_count_ || a_hat_.cols() != node_count_) {
    throw ShapeError("adjacency does not match the dataset sensor count");
  }
  if (cfg_.masking == MaskingMode::remove_nodes && kind_of(pretrained) != ModelKind::gamnet) {
    throw ConfigError("node removal with a fixed model needs a graph model");
  }
  std::tie(train_, validation_) = holdout_split(ds, cfg_.inner_train_fraction, cfg_.inner_split_seed);
  reference_ = std::move(pretrained);
}

std::size_t Quantifier::evaluations() const {
  std::lock_guard lock(cache_mutex_);
  return cache_.size();
}

double Quantifier::operator()(const SelectionVector& keep) const {
  if (static_cast<int>(keep.size()) != node_count_) {
    throw ShapeError("selection length " + std::to_string(keep.size()) + " != sensor count " +
                     std::to_string(node_count_));
  }
  if (keep.count() == 0) throw SelectionError("selection keeps no sensors");
  const std::string key = keep.to_string();
  {
    std::lock_guard lock(cache_mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
  }
  const double value = compute(keep);
  std::lock_guard lock(cache_mutex_);
  cache_.emplace(key, value);
  return value;
}

double Quantifier::compute(const SelectionVector& keep) const {
  const bool full = static_cast<int>(keep.count()) == node_count_;
  const bool remove = cfg_.masking == MaskingMode::remove_nodes && !full;
  const MatrixXd a_hat = remove ? restrict_adjacency(a_hat_, keep) : a_hat_;
  auto view = [&](const WindowedDataset& d) {
    if (full) return d;
    return remove ? d.restricted(keep) : d.masked(keep);
  };

  if (cfg_.eval_policy == EvalPolicy::mask_only) return evaluate(*reference_, view(validation_), a_hat).accuracy;

  TrainConfig tc = cfg_.train_cfg;
  tc.seed = derive_seed(cfg_.train_cfg.seed, {fnv1a64(keep.to_string())});
  const auto model = train(view(train_), a_hat, tc).params;
  return evaluate(model, view(validation_), a_hat).accuracy;
}

double quantify(const WindowedDataset& ds, const MatrixXd& a_hat, const SelectionVector& keep,
                const QuantifierConfig& cfg) {
  return Quantifier(ds, a_hat, cfg)(keep);
}

bool OptimizationTrace::reaches(int k) const {
  if (k == node_count) return true;
  return std::any_of(steps.begin(), steps.end(),
                     [k](const TraceStep& s) { return static_cast<int>(s.surviving.count()) == k; });
}

SelectionVector OptimizationTrace::surviving(int k) const {
  if (k == node_count) return SelectionVector::all(node_count);
  for (const auto& s : steps) {
    if (static_cast<int>(s.surviving.count()) == k) return s.surviving;
  }
  throw SelectionError("trace does not reach " + std::to_string(k) + " sensors");
}

double OptimizationTrace::value_at(int k) const {
  if (k == node_count) return initial_value;
  for (const auto& s : steps) {
    if (static_cast<int>(s.surviving.count()) == k) return s.value;
  }
  throw SelectionError("trace does not reach " + std::to_string(k) + " sensors");
}

OptimizationTrace greedy_search(int node_count, int k, const SubsetScore& score) {
  check_k(node_count, k);
  OptimizationTrace trace;
  trace.node_count = node_count;
  SelectionVector current = SelectionVector::all(node_count);
  trace.initial_value = score(current);

  while (static_cast<int>(current.count()) > k) {
    const auto candidates = current.indices();
    std::vector<double> values(candidates.size());
    parallel_for(candidates.size(), [&](std::size_t i) { values[i] = score(current.without(candidates[i])); });
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i) {
      if (values[i] > values[best]) best = i;
    }
    current = current.without(candidates[best]);
    trace.steps.push_back({candidates[best], current, values[best]});
  }
  trace.final = current;
  return trace;
}

std::pair<SelectionVector, OptimizationTrace> greedy_spo(const WindowedDataset& ds, const MatrixXd& a_hat, int k,
                                                         const QuantifierConfig& cfg) {
  check_k(ds.node_count(), k);
  const Quantifier q(ds, a_hat, cfg);
  auto trace = greedy_search(ds.node_count(), k, score_of(q));
  return {trace.final, std::move(trace)};
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t r = 1;
  for (int i = 1; i <= k; ++i) {
    // r * (n-k+i) / i stays integral at every step
    const std::uint64_t num = static_cast<std::uint64_t>(n - k + i);
    if (r > std::numeric_limits<std::uint64_t>::max() / num) return std::numeric_limits<std::uint64_t>::max();
    r = r * num / static_cast<std::uint64_t>(i);
  }
  return r;
}

namespace {

std::uint64_t check_budget(int node_count, int k, std::uint64_t budget) {
  if (k < 1 || k > node_count) {
    throw SelectionError("subset size k=" + std::to_string(k) + " must lie in [1, " + std::to_string(node_count) +
                         "]");
  }
  const std::uint64_t total = binomial(node_count, k);
  if (total > budget) {
    throw SelectionError("exhaustive search over C(" + std::to_string(node_count) + ", " + std::to_string(k) +
                         ") = " + std::to_string(total) + " subsets exceeds the budget of " +
                         std::to_string(budget));
  }
  return total;
}

}  // namespace

ExhaustiveResult exhaustive_search(int node_count, int k, const SubsetScore& score, std::uint64_t budget) {
  const std::uint64_t total = check_budget(node_count, k, budget);
  std::vector<SelectionVector> subsets;
  subsets.reserve(total);
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[i] = i;
  while (true) {
    subsets.push_back(SelectionVector::from_indices(node_count, idx));
    int i = k - 1;
    while (i >= 0 && idx[i] == node_count - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }

  std::vector<double> values(subsets.size());
  parallel_for(subsets.size(), [&](std::size_t i) { values[i] = score(subsets[i]); });
  std::size_t best = 0;
  for (std::size_t i = 1; i < subsets.size(); ++i) {
    if (values[i] > values[best] || (values[i] == values[best] && subsets[i] < subsets[best])) best = i;
  }
  return {subsets[best], values[best], subsets.size()};
}

SelectionVector exhaustive_spo(const WindowedDataset& ds, const MatrixXd& a_hat, int k, const QuantifierConfig& cfg,
                               std::uint64_t budget) {
  check_budget(ds.node_count(), k, budget);
  const Quantifier q(ds, a_hat, cfg);
  return exhaustive_search(ds.node_count(), k, score_of(q), budget).best;
}

RandomBaseline random_search(int node_count, int k, int runs, std::uint64_t seed, const SubsetScore& score) {
  if (k < 1 || k > node_count) {
    throw SelectionError("subset size k=" + std::to_string(k) + " must lie in [1, " + std::to_string(node_count) +
                         "]");
  }
  if (runs < 1) throw ConfigError("random baseline needs at least one run");
  RandomBaseline out;
  out.subsets.reserve(static_cast<std::size_t>(runs));
  for (int r = 0; r < runs; ++r) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(k), static_cast<std::uint64_t>(r)}));
    std::vector<int> order(static_cast<std::size_t>(node_count));
    for (int i = 0; i < node_count; ++i) order[i] = i;
    shuffle_in_place(order, rng);
    order.resize(static_cast<std::size_t>(k));
    out.subsets.push_back(SelectionVector::from_indices(node_count, order));
  }
  out.values.resize(out.subsets.size());
  parallel_for(out.subsets.size(), [&](std::size_t i) { out.values[i] = score(out.subsets[i]); });
  const auto ms = mean_sd(out.values);
  out.mean = ms.mean;
  out.sd = ms.sd;
  return out;
}

RandomBaseline random_selection_baseline(const WindowedDataset& ds, const MatrixXd& a_hat, int k, int runs,
                                         std::uint64_t seed, const QuantifierConfig& cfg) {
  const Quantifier q(ds, a_hat, cfg);
  return random_search(ds.node_count(), k, runs, seed, score_of(q));
}

VectorXd selection_probability_map(const std::vector<OptimizationTrace>& traces, int k) {
  if (traces.empty()) throw InputError("no traces to aggregate");
  const int n = traces.front().node_count;
  VectorXd freq = VectorXd::Zero(n);
  for (const auto& t : traces) {
    if (t.node_count != n) throw ShapeError("traces cover different sensor counts");
    freq += t.surviving(k).as_weights();
  }
  return freq / static_cast<double>(traces.size());
}

CurveResult accuracy_vs_k(int node_count, const std::vector<int>& k_range, int random_runs, std::uint64_t seed,
                          const SubsetScore& score) {
  if (k_range.empty()) throw ConfigError("empty k range");
  std::vector<int> ks = k_range;
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.front() < 1 || ks.back() > node_count) {
    throw SelectionError("k range must lie within [1, " + std::to_string(node_count) + "]");
  }
  CurveResult out;
  if (ks.front() < node_count) {
    out.trace = greedy_search(node_count, ks.front(), score);
  } else {
    out.trace.node_count = node_count;
    out.trace.initial_value = score(SelectionVector::all(node_count));
    out.trace.final = SelectionVector::all(node_count);
  }
  for (int k : ks) {
    const auto baseline = random_search(node_count, k, random_runs, seed, score);
    out.rows.push_back({k, out.trace.value_at(k), baseline.mean, baseline.sd});
  }
  return out;
}

CurveResult accuracy_vs_k_curve(const WindowedDataset& ds, const MatrixXd& a_hat, const std::vector<int>& k_range,
                                const QuantifierConfig& cfg, int random_runs, std::uint64_t seed) {
  const Quantifier q(ds, a_hat, cfg);
  return accuracy_vs_k(ds.node_count(), k_range, random_runs, seed, score_of(q));
}

}  // namespace fmgspo
