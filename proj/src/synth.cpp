#include "fmgspo/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>

#include "fmgspo/errors.hpp"
#include "fmgspo/seeding.hpp"

namespace fmgspo {

namespace {

std::vector<int> sorted_informative(const SynthConfig& cfg) {
  std::vector<int> out = cfg.informative_sensors;
  std::sort(out.begin(), out.end());
  return out;
}

// Low-discrepancy recording phase so repetitions of a class start at
// different points of the cycle without depending on the noise seed.
double recording_phase(int repetition, int label) {
  const double golden = 0.6180339887498949;
  return 2.0 * std::numbers::pi * std::fmod(golden * (1 + repetition * 7 + label * 11), 1.0);
}

}  // namespace

void SynthConfig::validate(const PipelineConfig& pipeline) const {
  if (node_count < 1) throw ConfigError("node_count must be positive");
  if (class_count < 2) throw ConfigError("class_count must be >= 2");
  if (recordings_per_class < 1) throw ConfigError("recordings_per_class must be >= 1");
  if (!(sample_rate_hz > 0)) throw ConfigError("sample_rate_hz must be positive");
  if (!(noise_sd >= 0)) throw ConfigError("noise_sd must be nonnegative");
  if (!(amplitude > 0)) throw ConfigError("amplitude must be positive");
  if (!(min_frequency_hz > 0 && max_frequency_hz >= min_frequency_hz)) {
    throw ConfigError("frequency range must be positive and ordered");
  }
  std::set<int> seen;
  for (int s : informative_sensors) {
    if (s < 0 || s >= node_count) throw ConfigError("informative sensor " + std::to_string(s) + " out of range");
    if (!seen.insert(s).second) throw ConfigError("informative sensor " + std::to_string(s) + " listed twice");
  }
  const auto points = static_cast<int>(std::lround(duration_s * sample_rate_hz));
  const auto head = static_cast<int>(std::lround(pipeline.clip_head_ms * sample_rate_hz / 1000.0));
  const auto tail = static_cast<int>(std::lround(pipeline.clip_tail_ms * sample_rate_hz / 1000.0));
  const auto geometry = window_geometry(sample_rate_hz, pipeline.window_ms, pipeline.stride_ms);
  if (points - head - tail < geometry.width) {
    throw ConfigError("duration_s too short for one window after clipping");
  }
}

double synth_frequency(const SynthConfig& cfg, int label) {
  if (cfg.class_count < 2) return cfg.min_frequency_hz;
  const double ratio = cfg.max_frequency_hz / cfg.min_frequency_hz;
  return cfg.min_frequency_hz * std::pow(ratio, static_cast<double>(label) / (cfg.class_count - 1));
}

std::vector<RawRecording> generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto informative = sorted_informative(cfg);
  const auto points = static_cast<Eigen::Index>(std::lround(cfg.duration_s * cfg.sample_rate_hz));
  const Eigen::RowVectorXd time =
      Eigen::RowVectorXd::LinSpaced(points, 0.0, static_cast<double>(points - 1)) / cfg.sample_rate_hz;

  std::vector<RawRecording> out;
  out.reserve(static_cast<std::size_t>(cfg.class_count) * cfg.recordings_per_class);
  for (int label = 0; label < cfg.class_count; ++label) {
    for (int rep = 0; rep < cfg.recordings_per_class; ++rep) {
      RawRecording rec;
      rec.sample_rate_hz = cfg.sample_rate_hz;
      rec.label = label;
      rec.subject_id = "synth";
      rec.session_id = "rep" + std::to_string(rep);
      rec.source = "synth_c" + std::to_string(label) + "_r" + std::to_string(rep);

      Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(label), static_cast<std::uint64_t>(rep)}));
      std::normal_distribution<double> noise(0.0, cfg.noise_sd > 0 ? cfg.noise_sd : 1.0);
      rec.channels.resize(cfg.node_count, points);
      for (int s = 0; s < cfg.node_count; ++s) {
        for (Eigen::Index t = 0; t < points; ++t) {
          rec.channels(s, t) = kSynthBaseOffset + (cfg.noise_sd > 0 ? noise(rng) : 0.0);
        }
      }
      const double freq = synth_frequency(cfg, label);
      const double amp = cfg.amplitude * (1.0 + 0.25 * label / (cfg.class_count - 1));
      const double offset = 0.5 * label;
      const double m = static_cast<double>(informative.size());
      for (std::size_t slot = 0; slot < informative.size(); ++slot) {
        const double phase = recording_phase(rep, label) + 2.0 * std::numbers::pi * static_cast<double>(slot) / m;
        rec.channels.row(informative[slot]).array() +=
            offset + amp * (2.0 * std::numbers::pi * freq * time.array() + phase).sin();
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

ArmbandTopology synth_topology(const SynthConfig& cfg) {
  const int covered = std::accumulate(cfg.band_sizes.begin(), cfg.band_sizes.end(), 0);
  if (!cfg.band_sizes.empty() && covered == cfg.node_count) return build_banded_topology(cfg.band_sizes);
  if (cfg.node_count >= 3) return build_ring_topology(cfg.node_count);
  return build_custom_topology(cfg.node_count, {});
}

}  // namespace fmgspo
