#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fmgspo/signal_pipeline.hpp"
#include "fmgspo/trainer.hpp"

namespace fmgspo {

enum class EvalPolicy {
  retrain,    // fresh classifier per subset, trained on masked data
  mask_only,  // one full-sensor classifier, evaluated on masked data
};

enum class MaskingMode {
  zero_features,  // zero unselected rows, keep the adjacency
  remove_nodes,   // drop unselected rows and restrict the graph
};

std::string to_string(EvalPolicy policy);
EvalPolicy eval_policy_from_string(const std::string& s);
std::string to_string(MaskingMode mode);
MaskingMode masking_mode_from_string(const std::string& s);

struct QuantifierConfig {
  EvalPolicy eval_policy = EvalPolicy::retrain;
  MaskingMode masking = MaskingMode::zero_features;
  std::uint64_t inner_split_seed = 0;
  double inner_train_fraction = 0.8;
  TrainConfig train_cfg{.epochs = 50};

  void validate() const;
  friend bool operator==(const QuantifierConfig&, const QuantifierConfig&) = default;
};

/// Validation accuracy of a classifier restricted to a sensor subset.
///
/// The dataset is split once (stratified, seeded) into an inner training and
/// validation part. Under retrain, each subset trains a fresh model whose seed
/// is derived from the subset bits, so the score is a pure function of the
/// subset. Under mask_only, one model trained on all sensors (or supplied by
/// the caller) is evaluated on masked validation data. Scores are memoized.
class Quantifier {
 public:
  Quantifier(const WindowedDataset& ds, MatrixXd a_hat, QuantifierConfig cfg);
  Quantifier(const WindowedDataset& ds, MatrixXd a_hat, QuantifierConfig cfg, Model pretrained);

  double operator()(const SelectionVector& keep) const;

  int node_count() const { return node_count_; }
  const QuantifierConfig& config() const { return cfg_; }
  const WindowedDataset& inner_train() const { return train_; }
  const WindowedDataset& inner_validation() const { return validation_; }
  const std::optional<Model>& reference_model() const { return reference_; }
  /// Number of distinct subsets scored so far.
  std::size_t evaluations() const;

 private:
  double compute(const SelectionVector& keep) const;

  QuantifierConfig cfg_;
  MatrixXd a_hat_;
  WindowedDataset train_;
  WindowedDataset validation_;
  int node_count_ = 0;
  std::optional<Model> reference_;
  mutable std::mutex cache_mutex_;
  mutable std::map<std::string, double> cache_;
};

/// One-shot form of Quantifier.
double quantify(const WindowedDataset& ds, const MatrixXd& a_hat, const SelectionVector& keep,
                const QuantifierConfig& cfg);

/// Any subset score. Search routines only see this interface.
using SubsetScore = std::function<double(const SelectionVector&)>;

struct TraceStep {
  int removed_sensor = 0;
  SelectionVector surviving;
  double value = 0.0;
};

/// Record of a backward-elimination run.
struct OptimizationTrace {
  int node_count = 0;
  double initial_value = 0.0;  // score of the full sensor set
  std::vector<TraceStep> steps;
  SelectionVector final;

  /// Surviving set of size k (k = node_count gives the full set).
  SelectionVector surviving(int k) const;
  double value_at(int k) const;
  bool reaches(int k) const;
};

/// Backward elimination from the full set down to k sensors. Each step drops
/// the sensor whose removal leaves the highest score; ties go to the lowest
/// sensor index. Candidates within one step are scored in parallel.
OptimizationTrace greedy_search(int node_count, int k, const SubsetScore& score);

std::pair<SelectionVector, OptimizationTrace> greedy_spo(const WindowedDataset& ds, const MatrixXd& a_hat, int k,
                                                         const QuantifierConfig& cfg);

struct ExhaustiveResult {
  SelectionVector best;
  double value = 0.0;
  std::size_t evaluated = 0;
};

inline constexpr std::uint64_t kDefaultSubsetBudget = 10000;

/// Number of k-subsets of n, saturating at UINT64_MAX.
std::uint64_t binomial(int n, int k);

/// Scores every k-subset; ties go to the lexicographically smallest bit
/// string. Refuses when C(n, k) exceeds the budget.
ExhaustiveResult exhaustive_search(int node_count, int k, const SubsetScore& score,
                                   std::uint64_t budget = kDefaultSubsetBudget);

SelectionVector exhaustive_spo(const WindowedDataset& ds, const MatrixXd& a_hat, int k, const QuantifierConfig& cfg,
                               std::uint64_t budget = kDefaultSubsetBudget);

struct RandomBaseline {
  double mean = 0.0;
  double sd = 0.0;
  std::vector<double> values;
  std::vector<SelectionVector> subsets;
};

/// Scores `runs` uniformly drawn k-subsets (independent draws).
RandomBaseline random_search(int node_count, int k, int runs, std::uint64_t seed, const SubsetScore& score);

RandomBaseline random_selection_baseline(const WindowedDataset& ds, const MatrixXd& a_hat, int k, int runs,
                                         std::uint64_t seed, const QuantifierConfig& cfg);

/// Fraction of traces whose size-k surviving set contains each sensor.
VectorXd selection_probability_map(const std::vector<OptimizationTrace>& traces, int k);

struct CurveRow {
  int k = 0;
  double greedy = 0.0;
  double random_mean = 0.0;
  double random_sd = 0.0;
};

struct CurveResult {
  std::vector<CurveRow> rows;
  OptimizationTrace trace;
};

/// One nested greedy run down to min(k_range) plus a random baseline per k.
CurveResult accuracy_vs_k(int node_count, const std::vector<int>& k_range, int random_runs, std::uint64_t seed,
                          const SubsetScore& score);

CurveResult accuracy_vs_k_curve(const WindowedDataset& ds, const MatrixXd& a_hat, const std::vector<int>& k_range,
                                const QuantifierConfig& cfg, int random_runs = 10, std::uint64_t seed = 0);

}  // namespace fmgspo
