#include "fmgspo/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>
#include <unistd.h>

#include "fmgspo/errors.hpp"
#include "fmgspo/seeding.hpp"

namespace fmgspo {

namespace {

static_assert(std::endian::native == std::endian::little, "dataset archives assume a little-endian host");

constexpr std::string_view kDatasetMagic = "FMGSPODS";
constexpr int kFormatVersion = 1;

// Reads optional keys of a config object and rejects any key it was not asked about.
class Fields {
 public:
  Fields(const Json& j, std::string what) : j_(j), what_(std::move(what)) {
    if (!j_.is_object()) throw ConfigError(what_ + " must be a JSON object");
  }

  template <typename T>
  Fields& read(const char* key, T& out) {
    used_.insert(key);
    if (auto it = j_.find(key); it != j_.end()) {
      try {
        out = it->template get<T>();
      } catch (const Json::exception& e) {
        throw ConfigError(what_ + "." + key + ": " + e.what());
      }
    }
    return *this;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.contains(item.key())) throw ConfigError("unknown key '" + item.key() + "' in " + what_);
    }
  }

 private:
  const Json& j_;
  std::string what_;
  std::set<std::string> used_;
};

Json matrix_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) throw ParseError(what + " must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) throw ParseError(what + " is not rectangular");
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw ParseError(what + " holds a non-number");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

Json vector_json(const VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

VectorXd vector_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw ParseError(what + " must be an array");
  VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(what + " holds a non-number");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

template <typename T>
void append_raw(std::string& out, const T& value) {
  out.append(reinterpret_cast<const char*>(&value), sizeof(T));
}

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}

  std::string_view take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw ParseError("dataset archive is truncated");
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  template <typename T>
  T get() {
    T value;
    std::memcpy(&value, take(sizeof(T)).data(), sizeof(T));
    return value;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Json to_json(const PipelineConfig& cfg) {
  return {{"clip_head_ms", cfg.clip_head_ms},
          {"clip_tail_ms", cfg.clip_tail_ms},
          {"smoothing_points", cfg.smoothing_points},
          {"window_ms", cfg.window_ms},
          {"stride_ms", cfg.stride_ms}};
}

PipelineConfig pipeline_config_from_json(const Json& j) {
  PipelineConfig cfg;
  Fields(j, "pipeline config")
      .read("clip_head_ms", cfg.clip_head_ms)
      .read("clip_tail_ms", cfg.clip_tail_ms)
      .read("smoothing_points", cfg.smoothing_points)
      .read("window_ms", cfg.window_ms)
      .read("stride_ms", cfg.stride_ms)
      .finish();
  if (cfg.clip_head_ms < 0 || cfg.clip_tail_ms < 0) throw ConfigError("clip lengths must be nonnegative");
  if (cfg.smoothing_points < 1) throw ConfigError("smoothing_points must be >= 1");
  if (!(cfg.window_ms > 0) || !(cfg.stride_ms > 0)) throw ConfigError("window_ms and stride_ms must be positive");
  return cfg;
}

Json to_json(const TrainConfig& cfg) {
  return {{"epochs", cfg.epochs},
          {"learning_rate", cfg.learning_rate},
          {"batch_size", cfg.batch_size},
          {"seed", cfg.seed},
          {"model_kind", to_string(cfg.model_kind)},
          {"hidden_width", cfg.hidden_width},
          {"sensor_dropout", cfg.sensor_dropout}};
}

TrainConfig train_config_from_json(const Json& j) {
  TrainConfig cfg;
  std::string kind = to_string(cfg.model_kind);
  Fields(j, "train config")
      .read("epochs", cfg.epochs)
      .read("learning_rate", cfg.learning_rate)
      .read("batch_size", cfg.batch_size)
      .read("seed", cfg.seed)
      .read("model_kind", kind)
      .read("hidden_width", cfg.hidden_width)
      .read("sensor_dropout", cfg.sensor_dropout)
      .finish();
  cfg.model_kind = model_kind_from_string(kind);
  cfg.validate();
  return cfg;
}

Json to_json(const SynthConfig& cfg) {
  return {{"node_count", cfg.node_count},
          {"informative_sensors", cfg.informative_sensors},
          {"band_sizes", cfg.band_sizes},
          {"class_count", cfg.class_count},
          {"recordings_per_class", cfg.recordings_per_class},
          {"duration_s", cfg.duration_s},
          {"sample_rate_hz", cfg.sample_rate_hz},
          {"noise_sd", cfg.noise_sd},
          {"amplitude", cfg.amplitude},
          {"min_frequency_hz", cfg.min_frequency_hz},
          {"max_frequency_hz", cfg.max_frequency_hz},
          {"seed", cfg.seed}};
}

SynthConfig synth_config_from_json(const Json& j) {
  SynthConfig cfg;
  Fields(j, "synth config")
      .read("node_count", cfg.node_count)
      .read("informative_sensors", cfg.informative_sensors)
      .read("band_sizes", cfg.band_sizes)
      .read("class_count", cfg.class_count)
      .read("recordings_per_class", cfg.recordings_per_class)
      .read("duration_s", cfg.duration_s)
      .read("sample_rate_hz", cfg.sample_rate_hz)
      .read("noise_sd", cfg.noise_sd)
      .read("amplitude", cfg.amplitude)
      .read("min_frequency_hz", cfg.min_frequency_hz)
      .read("max_frequency_hz", cfg.max_frequency_hz)
      .read("seed", cfg.seed)
      .finish();
  cfg.validate();
  return cfg;
}

Json to_json(const QuantifierConfig& cfg) {
  return {{"eval_policy", to_string(cfg.eval_policy)},
          {"masking", to_string(cfg.masking)},
          {"inner_split_seed", cfg.inner_split_seed},
          {"inner_train_fraction", cfg.inner_train_fraction},
          {"train", to_json(cfg.train_cfg)}};
}

QuantifierConfig quantifier_config_from_json(const Json& j) {
  QuantifierConfig cfg;
  std::string policy = to_string(cfg.eval_policy);
  std::string masking = to_string(cfg.masking);
  Json train = to_json(cfg.train_cfg);
  Fields(j, "quantifier config")
      .read("eval_policy", policy)
      .read("masking", masking)
      .read("inner_split_seed", cfg.inner_split_seed)
      .read("inner_train_fraction", cfg.inner_train_fraction)
      .read("train", train)
      .finish();
  cfg.eval_policy = eval_policy_from_string(policy);
  cfg.masking = masking_mode_from_string(masking);
  // keys missing from "train" keep the quantifier's reduced-budget defaults
  Json merged = to_json(QuantifierConfig{}.train_cfg);
  if (!train.is_object()) throw ConfigError("quantifier config.train must be a JSON object");
  for (const auto& item : train.items()) merged[item.key()] = item.value();
  cfg.train_cfg = train_config_from_json(merged);
  cfg.validate();
  return cfg;
}

ArmbandTopology topology_from_json(const Json& j) {
  std::string kind;
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::vector<int> bands;
  Fields(j, "topology config")
      .read("kind", kind)
      .read("node_count", n)
      .read("edges", edges)
      .read("band_sizes", bands)
      .finish();
  if (kind == "ring") return build_ring_topology(n);
  if (kind == "custom") return build_custom_topology(n, edges);
  if (kind == "banded") {
    const auto t = build_banded_topology(bands);
    if (n != 0 && n != t.node_count()) throw ConfigError("band_sizes do not add up to node_count");
    return t;
  }
  throw ConfigError("topology kind must be ring, custom or banded, got '" + kind + "'");
}

Json to_json(const ArmbandTopology& topology) {
  Json j = {{"kind", to_string(topology.kind())}, {"node_count", topology.node_count()}};
  if (topology.kind() == TopologyKind::custom) {
    Json edges = Json::array();
    for (const auto& e : topology.edges()) edges.push_back({e.a, e.b});
    j["edges"] = std::move(edges);
  }
  return j;
}

Json to_json(const Model& model) {
  Json j = {{"format", "fmgspo-checkpoint"}, {"version", kFormatVersion}, {"model_kind", to_string(kind_of(model))}};
  if (const auto* g = std::get_if<GamNetParams<double>>(&model)) {
    j["w0"] = matrix_json(g->w0);
    j["w1"] = matrix_json(g->w1);
  } else {
    const auto& m = std::get<MlpParams<double>>(model);
    j["w0"] = matrix_json(m.w0);
    j["b0"] = vector_json(m.b0);
    j["w1"] = matrix_json(m.w1);
    j["b1"] = vector_json(m.b1);
  }
  return j;
}

Model model_from_json(const Json& j) {
  if (!j.is_object() || j.value("format", "") != "fmgspo-checkpoint") throw ParseError("not a checkpoint document");
  if (j.value("version", 0) != kFormatVersion) throw ParseError("unsupported checkpoint version");
  const auto kind = model_kind_from_string(j.value("model_kind", ""));
  if (!j.contains("w0") || !j.contains("w1")) throw ParseError("checkpoint lacks weights");
  if (kind == ModelKind::gamnet) {
    GamNetParams<double> p{matrix_from_json(j["w0"], "w0"), matrix_from_json(j["w1"], "w1")};
    if (p.w0.cols() != p.w1.rows()) throw ShapeError("checkpoint weight shapes do not chain");
    return p;
  }
  if (!j.contains("b0") || !j.contains("b1")) throw ParseError("checkpoint lacks biases");
  MlpParams<double> p{matrix_from_json(j["w0"], "w0"), vector_from_json(j["b0"], "b0"),
                      matrix_from_json(j["w1"], "w1"), vector_from_json(j["b1"], "b1")};
  if (p.w0.cols() != p.w1.rows() || p.b0.size() != p.w0.cols() || p.b1.size() != p.w1.cols()) {
    throw ShapeError("checkpoint weight shapes do not chain");
  }
  return p;
}

Json to_json(const OptimizationTrace& trace) {
  Json steps = Json::array();
  for (const auto& s : trace.steps) {
    steps.push_back({{"removed_sensor", s.removed_sensor}, {"surviving", s.surviving.to_string()}, {"value", s.value}});
  }
  return {{"node_count", trace.node_count},
          {"initial_value", trace.initial_value},
          {"steps", std::move(steps)},
          {"final", trace.final.to_string()}};
}

OptimizationTrace trace_from_json(const Json& j) {
  try {
    OptimizationTrace t;
    t.node_count = j.at("node_count").get<int>();
    t.initial_value = j.at("initial_value").get<double>();
    for (const auto& s : j.at("steps")) {
      t.steps.push_back({s.at("removed_sensor").get<int>(),
                         SelectionVector::from_string(s.at("surviving").get<std::string>()),
                         s.at("value").get<double>()});
    }
    t.final = SelectionVector::from_string(j.at("final").get<std::string>());
    return t;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed trace: ") + e.what());
  }
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json_file(const std::filesystem::path& path) {
  const auto text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  const auto parent = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  if (!std::filesystem::is_directory(parent)) throw InputError("directory does not exist: " + parent.string());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw InputError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void write_json_file(const std::filesystem::path& path, const Json& j) { write_file_atomic(path, j.dump(2) + "\n"); }

std::string fingerprint_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string fingerprint(const Json& j) { return fingerprint_hex(fnv1a64(j.dump())); }

std::string recording_csv(const RawRecording& rec) {
  std::string out;
  for (Eigen::Index s = 0; s < rec.node_count(); ++s) {
    if (s) out += ',';
    out += "s" + std::to_string(s);
  }
  out += '\n';
  for (Eigen::Index t = 0; t < rec.length(); ++t) {
    for (Eigen::Index s = 0; s < rec.node_count(); ++s) {
      if (s) out += ',';
      out += format_double(rec.channels(s, t));
    }
    out += '\n';
  }
  return out;
}

Json recording_metadata(const std::vector<RawRecording>& recordings, const std::vector<std::string>& files,
                        const std::vector<std::string>& label_names) {
  if (recordings.size() != files.size()) throw InputError("one file name per recording required");
  Json list = Json::array();
  for (std::size_t i = 0; i < recordings.size(); ++i) {
    const auto& r = recordings[i];
    list.push_back({{"file", files[i]},
                    {"label", r.label},
                    {"subject_id", r.subject_id},
                    {"session_id", r.session_id},
                    {"sample_rate_hz", r.sample_rate_hz}});
  }
  return {{"format", "fmgspo-recordings"},
          {"version", kFormatVersion},
          {"label_names", label_names},
          {"recordings", std::move(list)}};
}

std::vector<RawRecording> load_recording_dir(const std::filesystem::path& dir, std::vector<std::string>* label_names) {
  if (!std::filesystem::is_directory(dir)) throw InputError("not a directory: " + dir.string());
  const auto meta_path = dir / kRecordingMetadataFile;
  if (!std::filesystem::exists(meta_path)) throw InputError("no " + std::string(kRecordingMetadataFile) + " in " + dir.string());
  const Json meta = read_json_file(meta_path);
  std::vector<RawRecording> out;
  try {
    if (meta.at("format").get<std::string>() != "fmgspo-recordings") throw ParseError("wrong metadata format tag");
    for (const auto& r : meta.at("recordings")) {
      out.push_back(load_recording_csv(dir / r.at("file").get<std::string>(), r.at("sample_rate_hz").get<double>(),
                                       r.at("label").get<int>(), r.value("subject_id", ""),
                                       r.value("session_id", "")));
    }
    if (label_names) *label_names = meta.value("label_names", std::vector<std::string>{});
  } catch (const Json::exception& e) {
    throw ParseError(meta_path.string() + ": " + e.what());
  }
  if (out.empty()) throw InputError("no recordings listed in " + meta_path.string());
  return out;
}

std::string serialize_dataset(const WindowedDataset& ds) {
  Json recs = Json::array();
  for (std::size_t i = 0; i < ds.recordings().size(); ++i) {
    const auto& r = ds.recordings()[i];
    recs.push_back({{"label", r.label},
                    {"subject_id", r.subject_id},
                    {"session_id", r.session_id},
                    {"source", r.source},
                    {"length", ds.signals()[i].cols()}});
  }
  const Json header = {{"format", "fmgspo-dataset"},
                       {"version", kFormatVersion},
                       {"node_count", ds.node_count()},
                       {"feature_len", ds.feature_len()},
                       {"class_count", ds.class_count()},
                       {"label_names", ds.label_names},
                       {"pipeline", to_json(ds.pipeline)},
                       {"recordings", std::move(recs)},
                       {"sample_count", ds.size()}};
  const std::string head = header.dump();

  std::string out(kDatasetMagic);
  append_raw(out, static_cast<std::uint64_t>(head.size()));
  out += head;
  for (const auto& s : ds.signals()) {
    out.append(reinterpret_cast<const char*>(s.data()), static_cast<std::size_t>(s.size()) * sizeof(double));
  }
  for (const auto& w : ds.samples()) {
    append_raw(out, static_cast<std::int32_t>(w.recording));
    append_raw(out, static_cast<std::int32_t>(w.start));
    append_raw(out, static_cast<std::int32_t>(w.label));
  }
  return out;
}

WindowedDataset deserialize_dataset(std::string_view bytes) {
  ByteReader in(bytes);
  if (in.take(kDatasetMagic.size()) != kDatasetMagic) throw ParseError("not a dataset archive");
  const auto head_len = in.get<std::uint64_t>();
  Json header;
  try {
    header = Json::parse(in.take(head_len));
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("dataset header: ") + e.what());
  }
  try {
    if (header.at("version").get<int>() != kFormatVersion) throw ParseError("unsupported dataset archive version");
    const auto n = header.at("node_count").get<Eigen::Index>();
    std::vector<MatrixXd> signals;
    std::vector<RecordingInfo> infos;
    for (const auto& r : header.at("recordings")) {
      infos.push_back({r.at("label").get<int>(), r.at("subject_id").get<std::string>(),
                       r.at("session_id").get<std::string>(), r.at("source").get<std::string>()});
      const auto t = r.at("length").get<Eigen::Index>();
      MatrixXd s(n, t);
      const auto raw = in.take(static_cast<std::size_t>(n * t) * sizeof(double));
      std::memcpy(s.data(), raw.data(), raw.size());
      signals.push_back(std::move(s));
    }
    const auto count = header.at("sample_count").get<std::size_t>();
    std::vector<WindowRef> samples(count);
    for (auto& w : samples) {
      w.recording = in.get<std::int32_t>();
      w.start = in.get<std::int32_t>();
      w.label = in.get<std::int32_t>();
    }
    if (!in.done()) throw ParseError("trailing bytes after dataset archive");
    WindowedDataset ds(std::move(signals), std::move(infos), std::move(samples), header.at("feature_len").get<int>(),
                       header.at("class_count").get<int>());
    ds.label_names = header.at("label_names").get<std::vector<std::string>>();
    ds.pipeline = pipeline_config_from_json(header.at("pipeline"));
    return ds;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("dataset header: ") + e.what());
  }
}

void save_dataset(const std::filesystem::path& path, const WindowedDataset& ds) {
  write_file_atomic(path, serialize_dataset(ds));
}

WindowedDataset load_dataset(const std::filesystem::path& path) { return deserialize_dataset(read_text_file(path)); }

std::string dataset_fingerprint(const WindowedDataset& ds) { return fingerprint_hex(fnv1a64(serialize_dataset(ds))); }

std::string loss_curve_csv(const std::vector<double>& curve) {
  std::string out = "epoch,loss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) out += std::to_string(i + 1) + "," + format_double(curve[i]) + "\n";
  return out;
}

std::string confusion_csv(const ConfusionMatrix& confusion, const std::vector<std::string>& label_names) {
  auto name = [&](Eigen::Index c) {
    return static_cast<std::size_t>(c) < label_names.size() ? label_names[c] : std::to_string(c);
  };
  std::string out = "true\\predicted";
  for (Eigen::Index c = 0; c < confusion.cols(); ++c) out += "," + name(c);
  out += '\n';
  for (Eigen::Index r = 0; r < confusion.rows(); ++r) {
    out += name(r);
    for (Eigen::Index c = 0; c < confusion.cols(); ++c) out += "," + std::to_string(confusion(r, c));
    out += '\n';
  }
  return out;
}

std::string curve_csv(const std::vector<CurveRow>& rows) {
  std::string out = "k,greedy_accuracy,random_mean,random_sd\n";
  for (const auto& r : rows) {
    out += std::to_string(r.k) + "," + format_double(r.greedy) + "," + format_double(r.random_mean) + "," +
           format_double(r.random_sd) + "\n";
  }
  return out;
}

std::string probability_map_csv(const VectorXd& frequency) {
  std::string out = "sensor_id,frequency\n";
  for (Eigen::Index i = 0; i < frequency.size(); ++i) out += std::to_string(i) + "," + format_double(frequency[i]) + "\n";
  return out;
}

}  // namespace fmgspo
