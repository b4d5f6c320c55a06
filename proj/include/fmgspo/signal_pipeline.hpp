#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fmgspo/types.hpp"

namespace fmgspo {

/// One labeled multi-channel recording. channels is N x T (row = sensor).
struct RawRecording {
  double sample_rate_hz = 1000.0;
  MatrixXd channels;
  int label = 0;
  std::string subject_id;
  std::string session_id;
  std::string source;

  Eigen::Index node_count() const { return channels.rows(); }
  Eigen::Index length() const { return channels.cols(); }
};

struct WindowSample {
  MatrixXd features;  // N x F
  int label = 0;
};

/// Preprocessing knobs, applied in this order: clip, smooth, normalize, window.
struct PipelineConfig {
  double clip_head_ms = 500.0;
  double clip_tail_ms = 500.0;
  int smoothing_points = 10;
  double window_ms = 150.0;
  double stride_ms = 1.0;

  friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

struct WindowGeometry {
  int width = 0;   // points per window
  int stride = 0;  // points between window starts
};

/// Window geometry in points at the given sample rate.
/// Width is round(window_ms * rate / 1000); stride is at least one point.
WindowGeometry window_geometry(double sample_rate_hz, double window_ms, double stride_ms);

/// floor((T - w) / s) + 1, or 0 when the window does not fit.
int window_count(int length, const WindowGeometry& geometry);

RawRecording load_recording_csv(const std::filesystem::path& path, double sample_rate_hz, int label,
                                std::string subject_id, std::string session_id);

RawRecording clip_recording(const RawRecording& rec, double head_ms, double tail_ms);

/// Causal trailing mean over min(window_points, position + 1) points.
RawRecording moving_average(const RawRecording& rec, int window_points = 10);

/// Per-channel min-max scaling to [0, 1]; constant channels become zero.
RawRecording min_max_normalize(const RawRecording& rec);

std::vector<WindowSample> slide_windows(const RawRecording& rec, double window_ms = 150.0,
                                        double stride_ms = 1.0);

/// Source recording of a group of windows.
struct RecordingInfo {
  int label = 0;
  std::string subject_id;
  std::string session_id;
  std::string source;
};

/// A window is a column range of one preprocessed recording.
struct WindowRef {
  int recording = 0;
  int start = 0;
  int label = 0;
};

/// Labeled windows over shared preprocessed signals.
///
/// Windows are views into the stored N x T signals, so overlapping windows
/// cost no extra memory. Subsets share the signal storage; masking copies it.
class WindowedDataset {
 public:
  using FeatureBlock = Eigen::Block<const MatrixXd>;

  WindowedDataset() = default;
  WindowedDataset(std::vector<MatrixXd> signals, std::vector<RecordingInfo> recordings,
                  std::vector<WindowRef> samples, int feature_len, int class_count);

  /// Each sample becomes its own single-window recording.
  static WindowedDataset from_samples(const std::vector<WindowSample>& samples, int class_count);

  std::size_t size() const { return samples_.size(); }
  bool empty() const { return samples_.empty(); }
  int node_count() const { return node_count_; }
  int feature_len() const { return feature_len_; }
  int class_count() const { return class_count_; }

  FeatureBlock features(std::size_t i) const;
  int label(std::size_t i) const { return samples_[i].label; }
  const WindowRef& ref(std::size_t i) const { return samples_[i]; }
  const RecordingInfo& provenance(std::size_t i) const { return (*recordings_)[samples_[i].recording]; }

  const std::vector<WindowRef>& samples() const { return samples_; }
  const std::vector<MatrixXd>& signals() const { return *signals_; }
  const std::vector<RecordingInfo>& recordings() const { return *recordings_; }
  std::vector<int> labels() const;
  std::vector<std::size_t> class_sizes() const;

  WindowedDataset subset(std::span<const std::size_t> indices) const;
  /// Same windows with unselected sensor rows zeroed.
  WindowedDataset masked(const SelectionVector& keep) const;
  /// Same windows keeping only the selected sensor rows, renumbered densely.
  WindowedDataset restricted(const SelectionVector& keep) const;

  std::vector<std::string> label_names;
  PipelineConfig pipeline;

 private:
  std::shared_ptr<const std::vector<MatrixXd>> signals_ = std::make_shared<std::vector<MatrixXd>>();
  std::shared_ptr<const std::vector<RecordingInfo>> recordings_ =
      std::make_shared<std::vector<RecordingInfo>>();
  std::vector<WindowRef> samples_;
  int node_count_ = 0;
  int feature_len_ = 0;
  int class_count_ = 0;
};

/// Runs clip, smoothing, normalization and windowing on every recording.
/// Sample order is recording order, then window start.
WindowedDataset assemble_dataset(std::span<const RawRecording> recordings, const PipelineConfig& config);

struct FoldPlan {
  std::vector<int> fold_of;  // per sample
  int k = 0;
  std::uint64_t seed = 0;

  std::vector<std::size_t> members(int fold) const;
  std::vector<std::size_t> complement(int fold) const;
};

/// Seeded, class-stratified k-fold assignment.
FoldPlan split_folds(const WindowedDataset& ds, int k, std::uint64_t seed);

/// Indices of the (train, test) sides of a stratified seeded split.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_indices(
    const WindowedDataset& ds, double train_fraction, std::uint64_t seed);

std::pair<WindowedDataset, WindowedDataset> holdout_split(const WindowedDataset& ds,
                                                          double train_fraction, std::uint64_t seed);

}  // namespace fmgspo
