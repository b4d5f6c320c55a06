#include "fmgspo/cli.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "fmgspo/errors.hpp"
#include "fmgspo/parallel.hpp"
#include "fmgspo/seeding.hpp"

namespace fmgspo::cli {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Creates `out` if needed. Its parent has to exist already.
void prepare_out_dir(const fs::path& out) {
  if (out.empty()) throw InputError("no output directory given");
  if (fs::exists(out)) {
    if (!fs::is_directory(out)) throw InputError("output path exists and is not a directory: " + out.string());
    return;
  }
  const auto parent = out.has_parent_path() ? out.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) throw InputError("parent of output directory does not exist: " + parent.string());
  fs::create_directory(out);
}

std::string file_fingerprint(const fs::path& path) { return fingerprint_hex(fnv1a64(read_text_file(path))); }

class Run {
 public:
  Run(std::string command, const fs::path& out) : out_(out) {
    prepare_out_dir(out_);
    m_.command = std::move(command);
    m_.started_at = utc_now();
  }

  RunManifest& manifest() { return m_; }

  void input(const fs::path& path, const std::string& fp) { m_.inputs.push_back({{"path", path.string()}, {"fingerprint", fp}}); }

  void write(const std::string& name, std::string_view bytes) {
    write_file_atomic(out_ / name, bytes);
    m_.outputs.push_back(name);
  }

  void write_json(const std::string& name, const Json& j) { write(name, j.dump(2) + "\n"); }

  RunManifest finish() {
    m_.finished_at = utc_now();
    write_json_file(out_ / kManifestFile, m_.to_json());
    return m_;
  }

 private:
  fs::path out_;
  RunManifest m_;
};

MatrixXd load_adjacency(const fs::path& topology_path, int node_count, Json* resolved) {
  const auto topo = topology_from_json(read_json_file(topology_path));
  if (topo.node_count() != node_count) {
    throw ShapeError("topology has " + std::to_string(topo.node_count()) + " sensors but the dataset has " +
                     std::to_string(node_count));
  }
  *resolved = to_json(topo);
  return normalized_adjacency(topo);
}

std::string join_indices(const SelectionVector& s) {
  std::string out;
  for (int i : s.indices()) out += (out.empty() ? "" : ",") + std::to_string(i);
  return "{" + out + "}";
}

std::string metric_key(const char* name, int k) { return std::string(name) + "_k" + std::to_string(k); }

}  // namespace

Json RunManifest::to_json() const {
  return {{"command", command},   {"config_fingerprint", config_fingerprint()},
          {"config", config},     {"seeds", seeds},
          {"inputs", inputs},     {"outputs", outputs},
          {"metrics", metrics},   {"started_at", started_at},
          {"finished_at", finished_at}};
}

RunManifest RunManifest::from_json(const Json& j) {
  try {
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.config = j.at("config");
    m.seeds = j.value("seeds", Json::object());
    m.inputs = j.value("inputs", Json::array());
    m.outputs = j.value("outputs", Json::array());
    m.metrics = j.value("metrics", Json::object());
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
    return m;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
}

RunManifest read_manifest(const fs::path& run_dir) {
  const auto path = run_dir / kManifestFile;
  if (!fs::exists(path)) throw InputError("missing " + std::string(kManifestFile) + " in " + run_dir.string());
  return RunManifest::from_json(read_json_file(path));
}

RunManifest cmd_synth(const SynthOptions& opt, std::ostream& log) {
  SynthConfig cfg = opt.config ? synth_config_from_json(read_json_file(*opt.config)) : SynthConfig{};
  if (opt.seed) cfg.seed = *opt.seed;
  cfg.validate();
  const auto recordings = generate(cfg);

  Run run("synth", opt.out);
  auto& m = run.manifest();
  m.config = {{"synth", to_json(cfg)}};
  m.seeds = {{"root", cfg.seed}};
  if (opt.config) run.input(*opt.config, file_fingerprint(*opt.config));

  std::vector<std::string> files;
  for (const auto& r : recordings) {
    files.push_back(r.source + ".csv");
    run.write(files.back(), recording_csv(r));
  }
  std::vector<std::string> names;
  for (int c = 0; c < cfg.class_count; ++c) names.push_back("class_" + std::to_string(c));
  run.write_json(kRecordingMetadataFile, recording_metadata(recordings, files, names));
  run.write_json("topology.json", to_json(synth_topology(cfg)));
  m.metrics = {{"recordings", recordings.size()}, {"node_count", cfg.node_count}, {"class_count", cfg.class_count}};
  log << "wrote " << recordings.size() << " recordings (" << cfg.node_count << " sensors, " << cfg.class_count
      << " classes) to " << opt.out.string() << "\n";
  return run.finish();
}

RunManifest cmd_preprocess(const PreprocessOptions& opt, std::ostream& log) {
  const PipelineConfig cfg = opt.config ? pipeline_config_from_json(read_json_file(*opt.config)) : PipelineConfig{};
  std::vector<std::string> names;
  const auto recordings = load_recording_dir(opt.in, &names);
  auto ds = assemble_dataset(recordings, cfg);
  if (!names.empty()) ds.label_names = names;

  std::uint64_t h = fnv1a64(read_text_file(opt.in / kRecordingMetadataFile));
  for (const auto& r : recordings) h = fnv1a64(read_text_file(opt.in / r.source), h);

  Run run("preprocess", opt.out);
  auto& m = run.manifest();
  m.config = {{"pipeline", to_json(cfg)}};
  run.input(opt.in, fingerprint_hex(h));
  if (opt.config) run.input(*opt.config, file_fingerprint(*opt.config));
  const std::string bytes = serialize_dataset(ds);
  run.write("dataset.fmgds", bytes);
  const std::string fp = fingerprint_hex(fnv1a64(bytes));
  m.metrics = {{"samples", ds.size()},
               {"recordings", ds.recordings().size()},
               {"node_count", ds.node_count()},
               {"feature_len", ds.feature_len()},
               {"class_count", ds.class_count()}};
  log << "N=" << ds.node_count() << " F=" << ds.feature_len() << " C=" << ds.class_count() << ": " << ds.size()
      << " windows from " << ds.recordings().size() << " recordings, fingerprint " << fp << "\n";
  return run.finish();
}

RunManifest cmd_train(const TrainOptions& opt, std::ostream& log) {
  TrainConfig cfg = opt.config ? train_config_from_json(read_json_file(*opt.config)) : TrainConfig{};
  if (opt.seed) cfg.seed = *opt.seed;
  cfg.validate();
  if (!(opt.holdout_train_fraction > 0.0 && opt.holdout_train_fraction < 1.0)) {
    throw ConfigError("holdout train fraction must lie in (0, 1)");
  }
  if (opt.cv_folds < 0 || opt.cv_folds == 1) throw ConfigError("cross-validation needs at least 2 folds");
  if (opt.cv_repeats < 1) throw ConfigError("cross-validation repeats must be >= 1");

  const auto ds = load_dataset(opt.data);
  Json topo_json;
  const MatrixXd a_hat = load_adjacency(opt.topology, ds.node_count(), &topo_json);
  const std::uint64_t split_seed = derive_seed(cfg.seed, {30});
  const auto [train_set, test_set] = holdout_split(ds, opt.holdout_train_fraction, split_seed);
  const auto result = train(train_set, a_hat, cfg);
  const auto report = evaluate(result.params, test_set, a_hat);

  Run run("train", opt.out);
  auto& m = run.manifest();
  const std::string data_fp = dataset_fingerprint(ds);
  m.config = {{"train", to_json(cfg)},
              {"topology", topo_json},
              {"holdout_train_fraction", opt.holdout_train_fraction},
              {"cv_folds", opt.cv_folds},
              {"cv_repeats", opt.cv_repeats}};
  m.seeds = {{"root", cfg.seed}, {"holdout_split", split_seed}};
  run.input(opt.data, data_fp);
  run.input(opt.topology, file_fingerprint(opt.topology));
  if (opt.config) run.input(*opt.config, file_fingerprint(*opt.config));

  Json ckpt = to_json(result.params);
  ckpt["node_count"] = ds.node_count();
  ckpt["train_config"] = to_json(cfg);
  ckpt["dataset_fingerprint"] = data_fp;
  run.write_json("checkpoint.json", ckpt);
  run.write("loss_curve.csv", loss_curve_csv(result.loss_curve));
  run.write("confusion.csv", confusion_csv(report.confusion, ds.label_names));
  m.metrics = {{"holdout_accuracy", report.accuracy}, {"final_loss", result.loss_curve.back()}};
  log << to_string(cfg.model_kind) << " holdout accuracy " << std::fixed << std::setprecision(4) << report.accuracy
      << " on " << report.sample_count << " windows\n";

  if (opt.cv_folds > 0) {
    std::string csv = "repeat,fold,accuracy\n";
    std::vector<CvReport> runs;
    double mean = 0.0;
    double sd = 0.0;
    if (opt.cv_repeats > 1) {
      auto rep = repeated_cross_validate(ds, a_hat, cfg, opt.cv_folds, opt.cv_repeats);
      runs = std::move(rep.runs);
      mean = rep.mean;
      sd = rep.sd;
    } else {
      runs.push_back(cross_validate(ds, a_hat, cfg, opt.cv_folds));
      mean = runs.front().mean;
      sd = runs.front().sd;
    }
    for (std::size_t r = 0; r < runs.size(); ++r) {
      for (std::size_t f = 0; f < runs[r].fold_accuracies.size(); ++f) {
        csv += std::to_string(r) + "," + std::to_string(f) + "," + format_double(runs[r].fold_accuracies[f]) + "\n";
      }
    }
    run.write("cv.csv", csv);
    m.metrics["cv_mean"] = mean;
    m.metrics["cv_sd"] = sd;
    log << opt.cv_folds << "-fold accuracy " << mean << " +- " << sd << "\n";
  }
  return run.finish();
}

RunManifest cmd_eval(const EvalOptions& opt, std::ostream& log) {
  const auto ds = load_dataset(opt.data);
  const Json ckpt = read_json_file(opt.checkpoint);
  const Model model = model_from_json(ckpt);
  if (ckpt.contains("node_count") && ckpt["node_count"].get<int>() != ds.node_count()) {
    throw ShapeError("checkpoint was trained on " + std::to_string(ckpt["node_count"].get<int>()) +
                     " sensors but the dataset has " + std::to_string(ds.node_count()));
  }
  Json topo_json;
  const MatrixXd a_hat = load_adjacency(opt.topology, ds.node_count(), &topo_json);
  const auto report = evaluate(model, ds, a_hat);

  Run run("eval", opt.out);
  auto& m = run.manifest();
  m.config = {{"topology", topo_json}, {"model_kind", to_string(kind_of(model))}};
  run.input(opt.data, dataset_fingerprint(ds));
  run.input(opt.checkpoint, file_fingerprint(opt.checkpoint));
  run.input(opt.topology, file_fingerprint(opt.topology));
  run.write("confusion.csv", confusion_csv(report.confusion, ds.label_names));
  m.metrics = {{"accuracy", report.accuracy}, {"samples", report.sample_count}};
  for (Eigen::Index c = 0; c < report.per_class_recall.size(); ++c) {
    if (!std::isnan(report.per_class_recall[c])) m.metrics["recall_" + std::to_string(c)] = report.per_class_recall[c];
  }
  log << "accuracy " << std::fixed << std::setprecision(4) << report.accuracy << " on " << report.sample_count
      << " windows\n";
  return run.finish();
}

RunManifest cmd_optimize(const OptimizeOptions& opt, std::ostream& log) {
  QuantifierConfig qcfg = opt.config ? quantifier_config_from_json(read_json_file(*opt.config)) : QuantifierConfig{};
  const std::uint64_t root = opt.seed.value_or(0);
  if (opt.seed) {
    qcfg.inner_split_seed = derive_seed(root, {40});
    qcfg.train_cfg.seed = derive_seed(root, {41});
  }
  const std::uint64_t random_seed = derive_seed(root, {42});
  if (opt.ks.empty()) throw ConfigError("no target sensor count given");
  if (opt.random_runs < 1) throw ConfigError("random runs must be >= 1");

  const auto ds = load_dataset(opt.data);
  const int n = ds.node_count();
  for (int k : opt.ks) {
    if (k < 1 || k > n) throw SelectionError("k=" + std::to_string(k) + " outside [1, " + std::to_string(n) + "]");
  }
  const int k_min = *std::min_element(opt.ks.begin(), opt.ks.end());
  const int map_k = opt.map_k.value_or(k_min);
  Json topo_json;
  const MatrixXd a_hat = load_adjacency(opt.topology, n, &topo_json);
  if (opt.mode == SearchMode::exhaustive) {
    for (int k : opt.ks) {
      if (binomial(n, k) > opt.budget) {
        throw SelectionError("exhaustive search over C(" + std::to_string(n) + ", " + std::to_string(k) +
                             ") = " + std::to_string(binomial(n, k)) + " subsets exceeds the budget of " +
                             std::to_string(opt.budget));
      }
    }
  }

  Run run("optimize", opt.out);
  auto& m = run.manifest();
  m.config = {{"quantifier", to_json(qcfg)},
              {"topology", topo_json},
              {"mode", opt.mode == SearchMode::greedy ? "greedy" : "exhaustive"},
              {"ks", opt.ks},
              {"random_runs", opt.random_runs},
              {"budget", opt.budget},
              {"map_k", map_k}};
  m.seeds = {{"root", root},
             {"inner_split", qcfg.inner_split_seed},
             {"train", qcfg.train_cfg.seed},
             {"random_baseline", random_seed}};
  run.input(opt.data, dataset_fingerprint(ds));
  run.input(opt.topology, file_fingerprint(opt.topology));
  if (opt.config) run.input(*opt.config, file_fingerprint(*opt.config));

  const Quantifier q(ds, a_hat, qcfg);
  const SubsetScore score = [&q](const SelectionVector& s) { return q(s); };

  if (opt.mode == SearchMode::exhaustive) {
    Json results = Json::array();
    for (int k : opt.ks) {
      const auto r = exhaustive_search(n, k, score, opt.budget);
      results.push_back({{"k", k}, {"best", r.best.to_string()}, {"value", r.value}, {"evaluated", r.evaluated}});
      m.metrics[metric_key("exhaustive", k)] = r.value;
      log << "k=" << k << " best " << join_indices(r.best) << " accuracy " << std::fixed << std::setprecision(4)
          << r.value << " (" << r.evaluated << " subsets)\n";
    }
    run.write_json("exhaustive.json", {{"config_fingerprint", m.config_fingerprint()}, {"results", results}});
    return run.finish();
  }

  const auto curve = accuracy_vs_k(n, opt.ks, opt.random_runs, random_seed, score);
  Json trace = to_json(curve.trace);
  trace["config_fingerprint"] = m.config_fingerprint();
  run.write_json("trace.json", trace);
  run.write("curve.csv", curve_csv(curve.rows));
  for (const auto& row : curve.rows) {
    m.metrics[metric_key("greedy", row.k)] = row.greedy;
    m.metrics[metric_key("random_mean", row.k)] = row.random_mean;
  }
  if (k_min < n) {
    const auto s = curve.trace.surviving(k_min);
    log << "k=" << k_min << " selected " << join_indices(s) << " accuracy " << std::fixed << std::setprecision(4)
        << curve.trace.value_at(k_min) << "\n";
  }
  for (const auto& row : curve.rows) {
    log << "  k=" << std::setw(2) << row.k << "  greedy " << std::fixed << std::setprecision(4) << row.greedy
        << "  random " << row.random_mean << " +- " << row.random_sd << "\n";
  }

  std::map<std::string, std::vector<std::size_t>> by_subject;
  for (std::size_t i = 0; i < ds.size(); ++i) by_subject[ds.provenance(i).subject_id].push_back(i);
  if (by_subject.size() > 1) {
    if (map_k < 1 || map_k >= n) throw SelectionError("probability map size must lie in [1, " + std::to_string(n - 1) + "]");
    std::vector<OptimizationTrace> traces;
    Json per_subject = Json::object();
    for (const auto& [subject, idx] : by_subject) {
      const auto sub = ds.subset(idx);
      const Quantifier qs(sub, a_hat, qcfg);
      traces.push_back(greedy_search(n, map_k, [&qs](const SelectionVector& s) { return qs(s); }));
      per_subject[subject] = to_json(traces.back());
    }
    run.write_json("subject_traces.json", per_subject);
    run.write("probability_map.csv", probability_map_csv(selection_probability_map(traces, map_k)));
    log << "probability map over " << traces.size() << " subjects at k=" << map_k << "\n";
  }
  return run.finish();
}

std::vector<ReportRow> aggregate_runs(const std::vector<RunManifest>& runs) {
  std::vector<std::string> group_order;
  std::map<std::string, std::vector<std::string>> metric_order;
  std::map<std::pair<std::string, std::string>, std::vector<double>> values;
  for (const auto& r : runs) {
    std::string group = r.command;
    if (r.command == "train") group += "/" + r.config.at("train").value("model_kind", "?");
    if (r.command == "eval") group += "/" + r.config.value("model_kind", "?");
    if (r.command == "optimize") {
      group += "/" + r.config.at("quantifier").at("train").value("model_kind", "?") + "/" +
               r.config.value("mode", "?");
    }
    if (std::find(group_order.begin(), group_order.end(), group) == group_order.end()) group_order.push_back(group);
    for (const auto& item : r.metrics.items()) {
      if (!item.value().is_number()) continue;
      auto& order = metric_order[group];
      if (std::find(order.begin(), order.end(), item.key()) == order.end()) order.push_back(item.key());
      values[{group, item.key()}].push_back(item.value().get<double>());
    }
  }
  std::vector<ReportRow> rows;
  for (const auto& g : group_order) {
    for (const auto& metric : metric_order[g]) {
      const auto& v = values[{g, metric}];
      const auto ms = mean_sd(v);
      rows.push_back({g, metric, v.size(), ms.mean, ms.sd});
    }
  }
  return rows;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string out = "group,metric,n,mean,sd\n";
  for (const auto& r : rows) {
    out += r.group + "," + r.metric + "," + std::to_string(r.n) + "," + format_double(r.mean) + "," +
           format_double(r.sd) + "\n";
  }
  return out;
}

std::vector<ReportRow> cmd_report(const ReportOptions& opt, std::ostream& log) {
  if (opt.runs.empty()) throw InputError("no run directories given");
  std::vector<RunManifest> manifests;
  for (const auto& dir : opt.runs) manifests.push_back(read_manifest(dir));
  const auto rows = aggregate_runs(manifests);

  for (const auto& r : rows) {
    log << std::left << std::setw(28) << r.group << std::setw(22) << r.metric << std::right << std::setw(4) << r.n
        << "  " << std::fixed << std::setprecision(4) << r.mean << " +- " << r.sd << "\n";
  }
  if (opt.out) {
    Run run("report", *opt.out);
    auto& m = run.manifest();
    Json dirs = Json::array();
    for (const auto& d : opt.runs) dirs.push_back(d.string());
    m.config = {{"runs", dirs}};
    for (std::size_t i = 0; i < opt.runs.size(); ++i) {
      run.input(opt.runs[i], manifests[i].config_fingerprint());
    }
    run.write("summary.csv", report_csv(rows));
    run.finish();
  }
  return rows;
}

std::vector<int> parse_k_spec(const std::string& spec) {
  auto parse_int = [&](std::string_view s) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ConfigError("bad k specification '" + spec + "'");
    return v;
  };
  const auto dots = spec.find("..");
  if (dots == std::string::npos) return {parse_int(spec)};
  const int lo = parse_int(std::string_view(spec).substr(0, dots));
  const int hi = parse_int(std::string_view(spec).substr(dots + 2));
  if (lo > hi) throw ConfigError("empty k range '" + spec + "'");
  std::vector<int> out;
  for (int k = lo; k <= hi; ++k) out.push_back(k);
  return out;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sensor placement optimization for graph-based force myography armbands"};
  app.require_subcommand(1);

  SynthOptions so;
  std::string so_config;
  auto* synth = app.add_subcommand("synth", "Generate synthetic recordings with planted informative sensors");
  synth->add_option("--config", so_config, "synth config JSON");
  synth->add_option("--out", so.out, "output directory")->required();
  synth->add_option("--seed", so.seed, "root seed, overrides the config");

  PreprocessOptions po;
  std::string po_config;
  auto* preprocess = app.add_subcommand("preprocess", "Clip, smooth, normalize and window recordings");
  preprocess->add_option("--in", po.in, "recording directory with metadata.json")->required();
  preprocess->add_option("--config", po_config, "pipeline config JSON");
  preprocess->add_option("--out", po.out, "output directory")->required();

  TrainOptions to;
  std::string to_config;
  auto* train_cmd = app.add_subcommand("train", "Train a classifier on a holdout split");
  train_cmd->add_option("--data", to.data, "dataset archive")->required();
  train_cmd->add_option("--topology", to.topology, "topology config JSON")->required();
  train_cmd->add_option("--config", to_config, "train config JSON");
  train_cmd->add_option("--out", to.out, "output directory")->required();
  train_cmd->add_option("--seed", to.seed, "root seed, overrides the config");
  train_cmd->add_option("--holdout", to.holdout_train_fraction, "training fraction of the holdout split");
  train_cmd->add_option("--cv", to.cv_folds, "also run k-fold cross-validation");
  train_cmd->add_option("--repeats", to.cv_repeats, "independent cross-validation repeats");

  EvalOptions eo;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset archive");
  eval_cmd->add_option("--data", eo.data, "dataset archive")->required();
  eval_cmd->add_option("--checkpoint", eo.checkpoint, "checkpoint JSON")->required();
  eval_cmd->add_option("--topology", eo.topology, "topology config JSON")->required();
  eval_cmd->add_option("--out", eo.out, "output directory")->required();

  OptimizeOptions oo;
  std::string oo_config;
  std::string k_spec;
  std::string mode = "greedy";
  auto* optimize = app.add_subcommand("optimize", "Search for a k-sensor subset");
  optimize->add_option("--data", oo.data, "dataset archive")->required();
  optimize->add_option("--topology", oo.topology, "topology config JSON")->required();
  optimize->add_option("--config", oo_config, "quantifier config JSON");
  optimize->add_option("--out", oo.out, "output directory")->required();
  optimize->add_option("--k", k_spec, "target sensor count, or a range such as 1..16")->required();
  optimize->add_option("--mode", mode, "greedy or exhaustive")->check(CLI::IsMember({"greedy", "exhaustive"}));
  optimize->add_option("--random-runs", oo.random_runs, "random subsets per k");
  optimize->add_option("--budget", oo.budget, "maximum subsets for exhaustive search");
  optimize->add_option("--seed", oo.seed, "root seed, overrides the config seeds");
  optimize->add_option("--map-k", oo.map_k, "subset size for the per-subject probability map");

  ReportOptions ro;
  std::vector<std::string> run_dirs;
  std::string ro_out;
  auto* report = app.add_subcommand("report", "Aggregate run manifests into a summary table");
  report->add_option("runs", run_dirs, "run directories");
  report->add_option("--out", ro_out, "directory for summary.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (*synth) {
      if (!so_config.empty()) so.config = so_config;
      cmd_synth(so, out);
    } else if (*preprocess) {
      if (!po_config.empty()) po.config = po_config;
      cmd_preprocess(po, out);
    } else if (*train_cmd) {
      if (!to_config.empty()) to.config = to_config;
      cmd_train(to, out);
    } else if (*eval_cmd) {
      cmd_eval(eo, out);
    } else if (*optimize) {
      if (!oo_config.empty()) oo.config = oo_config;
      oo.ks = parse_k_spec(k_spec);
      oo.mode = mode == "exhaustive" ? SearchMode::exhaustive : SearchMode::greedy;
      cmd_optimize(oo, out);
    } else if (*report) {
      for (const auto& d : run_dirs) ro.runs.emplace_back(d);
      if (!ro_out.empty()) ro.out = ro_out;
      cmd_report(ro, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace fmgspo::cli
