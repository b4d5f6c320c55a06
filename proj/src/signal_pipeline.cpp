#include "fmgspo/signal_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string_view>

#include "fmgspo/errors.hpp"
#include "fmgspo/seeding.hpp"

namespace fmgspo {

namespace {

int ms_to_points(double ms, double rate) { return static_cast<int>(std::lround(ms * rate / 1000.0)); }

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_cells(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    cells.push_back(trim(line.substr(pos, comma == std::string_view::npos ? comma : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return cells;
}

bool parse_double(std::string_view cell, double& out) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

WindowGeometry window_geometry(double sample_rate_hz, double window_ms, double stride_ms) {
  if (!(sample_rate_hz > 0)) throw ConfigError("sample rate must be positive");
  WindowGeometry g;
  g.width = ms_to_points(window_ms, sample_rate_hz);
  g.stride = std::max(1, ms_to_points(stride_ms, sample_rate_hz));
  if (g.width < 1) throw ConfigError("window shorter than one sample");
  return g;
}

int window_count(int length, const WindowGeometry& g) {
  if (g.width > length) return 0;
  return (length - g.width) / g.stride + 1;
}

RawRecording load_recording_csv(const std::filesystem::path& path, double sample_rate_hz, int label,
                                std::string subject_id, std::string session_id) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_cells(line);
    std::vector<double> values(cells.size());
    bool numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (!parse_double(cells[c], values[c])) {
        numeric = false;
        bad_col = c;
        break;
      }
    }
    const bool first_content_row = rows.empty() && width == 0;
    if (!numeric) {
      if (first_content_row) {
        width = cells.size();  // header
        continue;
      }
      throw ParseError(path.string() + ": non-numeric cell at row " + std::to_string(line_no) +
                       ", column " + std::to_string(bad_col + 1) + ": '" + std::string(cells[bad_col]) +
                       "'");
    }
    if (width == 0) width = cells.size();
    if (cells.size() != width) {
      throw ParseError(path.string() + ": row " + std::to_string(line_no) + " has " +
                       std::to_string(cells.size()) + " columns, expected " + std::to_string(width));
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ParseError(path.string() + ": no data rows");

  RawRecording rec;
  rec.sample_rate_hz = sample_rate_hz;
  rec.label = label;
  rec.subject_id = std::move(subject_id);
  rec.session_id = std::move(session_id);
  rec.source = path.filename().string();
  rec.channels.resize(static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      rec.channels(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = rows[r][c];
    }
  }
  return rec;
}

RawRecording clip_recording(const RawRecording& rec, double head_ms, double tail_ms) {
  if (head_ms < 0 || tail_ms < 0) throw ConfigError("clip lengths must be nonnegative");
  const int head = ms_to_points(head_ms, rec.sample_rate_hz);
  const int tail = ms_to_points(tail_ms, rec.sample_rate_hz);
  const auto kept = rec.length() - head - tail;
  if (kept < 1) {
    throw InputError("clipping " + std::to_string(head) + "+" + std::to_string(tail) + " points from a " +
                     std::to_string(rec.length()) + "-point recording leaves no signal");
  }
  RawRecording out = rec;
  out.channels = rec.channels.middleCols(head, kept);
  return out;
}

RawRecording moving_average(const RawRecording& rec, int window_points) {
  if (window_points < 1) throw ConfigError("moving average needs at least one point");
  RawRecording out = rec;
  const Eigen::Index t_len = rec.length();
  for (Eigen::Index ch = 0; ch < rec.node_count(); ++ch) {
    const auto src = rec.channels.row(ch);
    for (Eigen::Index t = 0; t < t_len; ++t) {
      const Eigen::Index first = std::max<Eigen::Index>(0, t - window_points + 1);
      const auto span = src.segment(first, t - first + 1);
      // rounding can push the mean a ulp outside the window range
      out.channels(ch, t) = std::clamp(span.mean(), span.minCoeff(), span.maxCoeff());
    }
  }
  return out;
}

RawRecording min_max_normalize(const RawRecording& rec) {
  RawRecording out = rec;
  for (Eigen::Index ch = 0; ch < rec.node_count(); ++ch) {
    const double lo = rec.channels.row(ch).minCoeff();
    const double hi = rec.channels.row(ch).maxCoeff();
    if (hi > lo) {
      out.channels.row(ch) = (rec.channels.row(ch).array() - lo) / (hi - lo);
    } else {
      out.channels.row(ch).setZero();
    }
  }
  return out;
}

std::vector<WindowSample> slide_windows(const RawRecording& rec, double window_ms, double stride_ms) {
  const auto g = window_geometry(rec.sample_rate_hz, window_ms, stride_ms);
  const int count = window_count(static_cast<int>(rec.length()), g);
  if (count == 0) {
    throw InputError("window of " + std::to_string(g.width) + " points exceeds recording length " +
                     std::to_string(rec.length()));
  }
  std::vector<WindowSample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    out.push_back({rec.channels.middleCols(static_cast<Eigen::Index>(i) * g.stride, g.width), rec.label});
  }
  return out;
}

// ---------------------------------------------------------------------------

WindowedDataset::WindowedDataset(std::vector<MatrixXd> signals, std::vector<RecordingInfo> recordings,
                                 std::vector<WindowRef> samples, int feature_len, int class_count)
    : signals_(std::make_shared<const std::vector<MatrixXd>>(std::move(signals))),
      recordings_(std::make_shared<const std::vector<RecordingInfo>>(std::move(recordings))),
      samples_(std::move(samples)),
      feature_len_(feature_len),
      class_count_(class_count) {
  if (signals_->size() != recordings_->size()) throw InputError("signal/recording count mismatch");
  if (!signals_->empty()) node_count_ = static_cast<int>(signals_->front().rows());
  for (const auto& s : *signals_) {
    if (s.rows() != node_count_) throw InputError("recordings disagree on sensor count");
  }
  for (const auto& w : samples_) {
    if (w.recording < 0 || static_cast<std::size_t>(w.recording) >= signals_->size()) {
      throw InputError("window refers to a missing recording");
    }
    if (w.start < 0 || w.start + feature_len_ > (*signals_)[w.recording].cols()) {
      throw InputError("window exceeds its recording");
    }
    if (w.label < 0 || w.label >= class_count_) {
      throw InputError("label " + std::to_string(w.label) + " outside [0, " + std::to_string(class_count_) +
                       ")");
    }
  }
}

WindowedDataset WindowedDataset::from_samples(const std::vector<WindowSample>& samples, int class_count) {
  std::vector<MatrixXd> signals;
  std::vector<RecordingInfo> info;
  std::vector<WindowRef> refs;
  int feature_len = samples.empty() ? 0 : static_cast<int>(samples.front().features.cols());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].features.cols() != feature_len) throw ShapeError("samples disagree on feature length");
    signals.push_back(samples[i].features);
    info.push_back({samples[i].label, "", "", "sample-" + std::to_string(i)});
    refs.push_back({static_cast<int>(i), 0, samples[i].label});
  }
  return WindowedDataset(std::move(signals), std::move(info), std::move(refs), feature_len, class_count);
}

WindowedDataset::FeatureBlock WindowedDataset::features(std::size_t i) const {
  const auto& w = samples_[i];
  return FeatureBlock((*signals_)[w.recording], 0, w.start, node_count_, feature_len_);
}

std::vector<int> WindowedDataset::labels() const {
  std::vector<int> out(samples_.size());
  std::transform(samples_.begin(), samples_.end(), out.begin(), [](const WindowRef& w) { return w.label; });
  return out;
}

std::vector<std::size_t> WindowedDataset::class_sizes() const {
  std::vector<std::size_t> out(class_count_, 0);
  for (const auto& w : samples_) ++out[w.label];
  return out;
}

WindowedDataset WindowedDataset::subset(std::span<const std::size_t> indices) const {
  WindowedDataset out = *this;
  out.samples_.clear();
  out.samples_.reserve(indices.size());
  for (auto i : indices) out.samples_.push_back(samples_.at(i));
  return out;
}

WindowedDataset WindowedDataset::masked(const SelectionVector& keep) const {
  if (static_cast<int>(keep.size()) != node_count_) {
    throw ShapeError("selection length " + std::to_string(keep.size()) + " != sensor count " +
                     std::to_string(node_count_));
  }
  const VectorXd w = keep.as_weights();
  auto signals = std::make_shared<std::vector<MatrixXd>>();
  signals->reserve(signals_->size());
  for (const auto& s : *signals_) signals->push_back(w.asDiagonal() * s);
  WindowedDataset out = *this;
  out.signals_ = std::move(signals);
  return out;
}

WindowedDataset WindowedDataset::restricted(const SelectionVector& keep) const {
  if (static_cast<int>(keep.size()) != node_count_) {
    throw ShapeError("selection length " + std::to_string(keep.size()) + " != sensor count " +
                     std::to_string(node_count_));
  }
  const auto rows = keep.indices();
  if (rows.empty()) throw SelectionError("selection keeps no sensors");
  auto signals = std::make_shared<std::vector<MatrixXd>>();
  signals->reserve(signals_->size());
  for (const auto& s : *signals_) signals->push_back(s(rows, Eigen::all));
  WindowedDataset out = *this;
  out.signals_ = std::move(signals);
  out.node_count_ = static_cast<int>(rows.size());
  return out;
}

WindowedDataset assemble_dataset(std::span<const RawRecording> recordings, const PipelineConfig& config) {
  if (recordings.empty()) throw InputError("no recordings to assemble");
  const auto n = recordings.front().node_count();
  const double rate = recordings.front().sample_rate_hz;
  for (const auto& r : recordings) {
    if (r.node_count() != n) {
      throw InputError("mixed sensor counts: " + std::to_string(n) + " and " + std::to_string(r.node_count()));
    }
    if (r.sample_rate_hz != rate) throw InputError("mixed sample rates across recordings");
    if (r.label < 0) throw InputError("negative label in " + r.source);
  }
  const auto geometry = window_geometry(rate, config.window_ms, config.stride_ms);

  std::vector<MatrixXd> signals;
  std::vector<RecordingInfo> info;
  std::vector<WindowRef> refs;
  int max_label = 0;
  for (std::size_t i = 0; i < recordings.size(); ++i) {
    const auto& r = recordings[i];
    auto processed = min_max_normalize(
        moving_average(clip_recording(r, config.clip_head_ms, config.clip_tail_ms), config.smoothing_points));
    const int count = window_count(static_cast<int>(processed.length()), geometry);
    if (count == 0) {
      throw InputError("recording " + (r.source.empty() ? std::to_string(i) : r.source) +
                       " is shorter than one window after clipping");
    }
    for (int w = 0; w < count; ++w) refs.push_back({static_cast<int>(i), w * geometry.stride, r.label});
    signals.push_back(std::move(processed.channels));
    info.push_back({r.label, r.subject_id, r.session_id, r.source});
    max_label = std::max(max_label, r.label);
  }
  WindowedDataset ds(std::move(signals), std::move(info), std::move(refs), geometry.width, max_label + 1);
  ds.pipeline = config;
  return ds;
}

// ---------------------------------------------------------------------------

std::vector<std::size_t> FoldPlan::members(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::complement(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of.size(); ++i) {
    if (fold_of[i] != fold) out.push_back(i);
  }
  return out;
}

FoldPlan split_folds(const WindowedDataset& ds, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("need at least 2 folds");
  if (ds.size() < static_cast<std::size_t>(k)) {
    throw InputError("cannot split " + std::to_string(ds.size()) + " samples into " + std::to_string(k) +
                     " folds");
  }
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle_in_place(order, rng);
  // stable partition by class keeps the shuffled order inside each class;
  // the dealing counter runs on across classes so fold sizes stay within one
  std::stable_sort(order.begin(), order.end(),
                   [&ds](std::size_t a, std::size_t b) { return ds.label(a) < ds.label(b); });
  FoldPlan plan{std::vector<int>(ds.size()), k, seed};
  for (std::size_t pos = 0; pos < order.size(); ++pos) plan.fold_of[order[pos]] = static_cast<int>(pos % k);
  return plan;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> holdout_indices(
    const WindowedDataset& ds, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train fraction must be in (0, 1)");
  const int c_count = ds.class_count();
  std::vector<std::vector<std::size_t>> by_class(c_count);
  for (std::size_t i = 0; i < ds.size(); ++i) by_class[ds.label(i)].push_back(i);

  // largest-remainder quotas so the total lands on round(fraction * n)
  const auto target = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(ds.size())));
  std::vector<std::size_t> quota(c_count, 0);
  std::vector<std::pair<double, int>> remainders;
  std::size_t assigned = 0;
  for (int c = 0; c < c_count; ++c) {
    const auto n_c = by_class[c].size();
    if (n_c == 0) continue;
    if (n_c < 2) throw InputError("class " + std::to_string(c) + " has fewer than 2 samples; cannot stratify");
    const double exact = train_fraction * static_cast<double>(n_c);
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    assigned += quota[c];
    remainders.emplace_back(exact - std::floor(exact), c);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [rem, c] : remainders) {
    if (assigned >= target) break;
    ++quota[c];
    ++assigned;
  }

  std::vector<std::size_t> train, test;
  for (int c = 0; c < c_count; ++c) {
    auto members = by_class[c];
    if (members.empty()) continue;
    quota[c] = std::clamp<std::size_t>(quota[c], 1, members.size() - 1);
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(c)}));
    shuffle_in_place(members, rng);
    train.insert(train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(quota[c]));
    test.insert(test.end(), members.begin() + static_cast<std::ptrdiff_t>(quota[c]), members.end());
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {std::move(train), std::move(test)};
}

std::pair<WindowedDataset, WindowedDataset> holdout_split(const WindowedDataset& ds, double train_fraction,
                                                          std::uint64_t seed) {
  const auto [train, test] = holdout_indices(ds, train_fraction, seed);
  return {ds.subset(train), ds.subset(test)};
}

}  // namespace fmgspo
