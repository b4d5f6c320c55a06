#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "fmgspo/armband_graph.hpp"
#include "fmgspo/signal_pipeline.hpp"
#include "fmgspo/spo.hpp"
#include "fmgspo/synth.hpp"
#include "fmgspo/trainer.hpp"

namespace fmgspo {

using Json = nlohmann::ordered_json;

// Config documents. Missing keys keep their defaults; unknown keys are
// rejected so that typos do not silently fall back to defaults.
Json to_json(const PipelineConfig& cfg);
Json to_json(const TrainConfig& cfg);
Json to_json(const SynthConfig& cfg);
Json to_json(const QuantifierConfig& cfg);
PipelineConfig pipeline_config_from_json(const Json& j);
TrainConfig train_config_from_json(const Json& j);
SynthConfig synth_config_from_json(const Json& j);
QuantifierConfig quantifier_config_from_json(const Json& j);

/// {"kind": "ring", "node_count": n}, {"kind": "custom", "node_count": n,
/// "edges": [[a, b], ...]} or {"kind": "banded", "band_sizes": [...]}.
ArmbandTopology topology_from_json(const Json& j);
Json to_json(const ArmbandTopology& topology);

Json to_json(const Model& model);
Model model_from_json(const Json& j);

Json to_json(const OptimizationTrace& trace);
OptimizationTrace trace_from_json(const Json& j);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

std::string read_text_file(const std::filesystem::path& path);
Json read_json_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file, then renames it over `path`.
/// The parent directory must exist.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);
void write_json_file(const std::filesystem::path& path, const Json& j);

std::string fingerprint_hex(std::uint64_t h);
/// Fingerprint of a JSON document's compact text.
std::string fingerprint(const Json& j);

// Recording directories: one CSV per recording (rows are samples, columns are
// sensors, with a header row) plus metadata.json describing every file.
inline constexpr const char* kRecordingMetadataFile = "metadata.json";

std::string recording_csv(const RawRecording& rec);
Json recording_metadata(const std::vector<RawRecording>& recordings, const std::vector<std::string>& files,
                        const std::vector<std::string>& label_names);
/// Reads metadata.json and every CSV it lists, in listed order.
std::vector<RawRecording> load_recording_dir(const std::filesystem::path& dir,
                                             std::vector<std::string>* label_names = nullptr);

// Dataset archives: magic, JSON header, raw little-endian doubles of every
// preprocessed signal, then int32 (recording, start, label) triplets.
std::string serialize_dataset(const WindowedDataset& ds);
WindowedDataset deserialize_dataset(std::string_view bytes);
void save_dataset(const std::filesystem::path& path, const WindowedDataset& ds);
WindowedDataset load_dataset(const std::filesystem::path& path);
std::string dataset_fingerprint(const WindowedDataset& ds);

// CSV exports.
std::string loss_curve_csv(const std::vector<double>& curve);
std::string confusion_csv(const ConfusionMatrix& confusion, const std::vector<std::string>& label_names);
std::string curve_csv(const std::vector<CurveRow>& rows);
std::string probability_map_csv(const VectorXd& frequency);

}  // namespace fmgspo
