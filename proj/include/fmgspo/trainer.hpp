#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fmgspo/models.hpp"
#include "fmgspo/signal_pipeline.hpp"

namespace fmgspo {

enum class ModelKind { gamnet, mlp };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& s);

struct TrainConfig {
  int epochs = 200;
  double learning_rate = 0.05;
  int batch_size = 32;
  std::uint64_t seed = 0;
  ModelKind model_kind = ModelKind::gamnet;
  int hidden_width = 64;
  /// Probability of zeroing each sensor of each training window, drawn anew
  /// per batch. Zero disables it.
  double sensor_dropout = 0.0;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

using Model = std::variant<GamNetParams<double>, MlpParams<double>>;

ModelKind kind_of(const Model& model);

inline constexpr double kLossFloor = 1e-12;

/// -log(probs[label] + 1e-12)
double cross_entropy(const VectorXd& probs, int label);

struct GamNetGradients {
  MatrixXd dw0;
  MatrixXd dw1;
  double loss = 0.0;
};

struct MlpGradients {
  MatrixXd dw0;
  VectorXd db0;
  MatrixXd dw1;
  VectorXd db1;
  double loss = 0.0;
};

/// Exact gradients of cross_entropy(gamnet_forward(p, x, a_hat), label).
GamNetGradients gamnet_gradients(const GamNetParams<double>& p, const MatrixXd& x, const MatrixXd& a_hat,
                                 int label);

MlpGradients mlp_gradients(const MlpParams<double>& p, const MatrixXd& x, int label);

struct TrainResult {
  Model params;
  std::vector<double> loss_curve;  // mean training loss per epoch
};

/// Mini-batch gradient descent on mean cross-entropy.
/// Order is reshuffled every epoch from a seed derived from cfg.seed.
TrainResult train(const WindowedDataset& ds, const MatrixXd& a_hat, const TrainConfig& cfg);

/// Mean loss and mean gradients over the listed samples, as used by one update step.
/// Exposed so the batched path can be checked against gamnet_gradients.
GamNetGradients gamnet_batch_gradients(const GamNetParams<double>& p, const WindowedDataset& ds,
                                       const MatrixXd& a_hat, const std::vector<std::size_t>& batch);

/// Window-level logits for every sample, one row per sample.
MatrixXd predict_logits(const Model& model, const WindowedDataset& ds, const MatrixXd& a_hat);

/// argmax per sample; ties go to the lowest class id.
std::vector<int> predict(const Model& model, const WindowedDataset& ds, const MatrixXd& a_hat);

using ConfusionMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

struct EvalReport {
  double accuracy = 0.0;
  ConfusionMatrix confusion;  // [true][predicted]
  VectorXd per_class_recall;  // NaN for classes absent from the data
  std::size_t sample_count = 0;
  double wall_time_s = 0.0;
};

EvalReport make_report(const std::vector<int>& truth, const std::vector<int>& predicted, int class_count);

EvalReport evaluate(const Model& model, const WindowedDataset& ds, const MatrixXd& a_hat);

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;  // population
};

MeanSd mean_sd(const std::vector<double>& values);

struct CvReport {
  std::vector<double> fold_accuracies;
  double mean = 0.0;
  double sd = 0.0;
  FoldPlan plan;
};

/// k-fold cross-validation. Fold assignment and per-fold training seeds are
/// derived from cfg.seed.
CvReport cross_validate(const WindowedDataset& ds, const MatrixXd& a_hat, const TrainConfig& cfg, int k = 10);

struct RepeatedCvReport {
  std::vector<CvReport> runs;
  double mean = 0.0;  // over per-run means
  double sd = 0.0;
};

/// R independent cross-validations; each run reseeds both the fold split and
/// the initialization.
RepeatedCvReport repeated_cross_validate(const WindowedDataset& ds, const MatrixXd& a_hat, const TrainConfig& cfg,
                                         int k = 10, int repeats = 5);

}  // namespace fmgspo
