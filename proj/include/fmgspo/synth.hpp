#pragma once

#include <cstdint>
#include <vector>

#include "fmgspo/armband_graph.hpp"
#include "fmgspo/signal_pipeline.hpp"

namespace fmgspo {

/// Synthetic recordings with a known set of informative sensors.
///
/// Every informative sensor emits a sinusoid whose frequency, amplitude and
/// offset depend on the class. Frequencies are spaced geometrically over
/// [min_frequency_hz, max_frequency_hz]. The m informative sensors share one
/// recording phase but are shifted by 2*pi*j/m from each other, so the summed
/// slope magnitude over all of them hardly depends on where a window falls
/// in the cycle; dropping any one of them makes short windows ambiguous.
/// The remaining sensors carry Gaussian noise around a fixed offset.
struct SynthConfig {
  int node_count = 16;
  std::vector<int> informative_sensors{3, 6, 13};
  std::vector<int> band_sizes{6, 6, 4};
  int class_count = 4;
  int recordings_per_class = 10;
  double duration_s = 4.0;
  double sample_rate_hz = 1000.0;
  double noise_sd = 0.3;
  double amplitude = 1.0;
  double min_frequency_hz = 0.6;
  double max_frequency_hz = 4.8;
  std::uint64_t seed = 0;

  /// Throws ConfigError. The pipeline is used to check that at least one
  /// window survives clipping.
  void validate(const PipelineConfig& pipeline = {}) const;
  friend bool operator==(const SynthConfig&, const SynthConfig&) = default;
};

/// Sinusoid frequency (Hz) of class `label` on the informative sensors.
double synth_frequency(const SynthConfig& cfg, int label);

inline constexpr double kSynthBaseOffset = 2.0;

/// Recordings ordered by class, then repetition; labels are balanced.
std::vector<RawRecording> generate(const SynthConfig& cfg);

/// Per-band rings when band_sizes covers node_count, else one ring.
ArmbandTopology synth_topology(const SynthConfig& cfg);

}  // namespace fmgspo
