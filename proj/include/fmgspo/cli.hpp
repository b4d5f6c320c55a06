#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "fmgspo/io.hpp"

namespace fmgspo::cli {

namespace fs = std::filesystem;

/// Written as manifest.json into every command's output directory.
struct RunManifest {
  std::string command;
  Json config;  // fully resolved
  Json seeds = Json::object();
  Json inputs = Json::array();   // {"path", "fingerprint"}
  Json outputs = Json::array();  // file names inside the output directory
  Json metrics = Json::object();  // flat name -> number
  std::string started_at;
  std::string finished_at;

  std::string config_fingerprint() const { return fingerprint(config); }
  Json to_json() const;
  static RunManifest from_json(const Json& j);
};

inline constexpr const char* kManifestFile = "manifest.json";

RunManifest read_manifest(const fs::path& run_dir);

struct SynthOptions {
  std::optional<fs::path> config;
  fs::path out;
  std::optional<std::uint64_t> seed;
};

struct PreprocessOptions {
  fs::path in;
  std::optional<fs::path> config;
  fs::path out;
};

struct TrainOptions {
  fs::path data;
  fs::path topology;
  std::optional<fs::path> config;
  fs::path out;
  std::optional<std::uint64_t> seed;
  double holdout_train_fraction = 0.9;
  int cv_folds = 0;  // 0 skips cross-validation
  int cv_repeats = 1;
};

struct EvalOptions {
  fs::path data;
  fs::path checkpoint;
  fs::path topology;
  fs::path out;
};

enum class SearchMode { greedy, exhaustive };

struct OptimizeOptions {
  fs::path data;
  fs::path topology;
  std::optional<fs::path> config;
  fs::path out;
  std::vector<int> ks;  // one k or an inclusive range
  SearchMode mode = SearchMode::greedy;
  int random_runs = 10;
  std::uint64_t budget = kDefaultSubsetBudget;
  std::optional<std::uint64_t> seed;
  std::optional<int> map_k;  // defaults to the smallest requested k
};

struct ReportOptions {
  std::vector<fs::path> runs;
  std::optional<fs::path> out;
};

// Each command writes its outputs plus a manifest and returns the manifest.
// Human-readable summaries go to `log`. Failures throw fmgspo::Error.
RunManifest cmd_synth(const SynthOptions& opt, std::ostream& log);
RunManifest cmd_preprocess(const PreprocessOptions& opt, std::ostream& log);
RunManifest cmd_train(const TrainOptions& opt, std::ostream& log);
RunManifest cmd_eval(const EvalOptions& opt, std::ostream& log);
RunManifest cmd_optimize(const OptimizeOptions& opt, std::ostream& log);

struct ReportRow {
  std::string group;
  std::string metric;
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
};

std::vector<ReportRow> aggregate_runs(const std::vector<RunManifest>& runs);
std::string report_csv(const std::vector<ReportRow>& rows);
std::vector<ReportRow> cmd_report(const ReportOptions& opt, std::ostream& log);

/// Parses "3" as {3} and "1..16" as {1, ..., 16}.
std::vector<int> parse_k_spec(const std::string& spec);

/// Entry point of the command-line tool; returns the process exit status.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace fmgspo::cli
