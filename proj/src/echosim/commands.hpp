#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "echosim/analysis.hpp"
#include "echosim/engine.hpp"
#include "echosim/llm_client.hpp"

namespace echosim {

namespace fs = std::filesystem;

struct RunRequest {
  RunConfig config;
  fs::path out_dir;
  std::optional<std::string> run_id;
  int workers = 1;
  std::shared_ptr<ChatClient> client;  // LLM engine only; default is HTTP from config
};

struct RunOutput {
  std::string run_id;
  fs::path run_dir;
  RunResult result;
  std::string table;
  nlohmann::ordered_json summary;
};

// Validates, runs every trial and writes into <out_dir>/<run_id>/:
//   manifest.json, trial_<t>.jsonl (one TurnRecord per line), summary.json.
// Throws ValidationError before touching the filesystem when the config is
// invalid. Failed trials keep their partial logs; check result.ok().
RunOutput cmd_run(const RunRequest& request);

struct AnalyzeOptions {
  bool standardize = true;
  std::optional<std::string> embedder;  // see make_embedder
  double cluster_threshold = 0.9;
  std::optional<fs::path> compare_dir;
  std::optional<fs::path> out_dir;  // default: the log directory
  OutcomeThresholds thresholds;
};

// Reads a run directory, skipping unreadable log lines with a warning, and
// writes report.json, histogram_per_turn.csv and length_per_turn.csv.
nlohmann::ordered_json cmd_analyze(const fs::path& log_dir, const AnalyzeOptions& options);

struct SweepRequest {
  nlohmann::json base_config;
  fs::path base_dir;
  nlohmann::ordered_json grid;  // key -> list of values
  fs::path out_dir;
  std::optional<std::string> sweep_id;
  int workers = 1;
  std::shared_ptr<ChatClient> client;
};

// One run per grid cell (cartesian product, keys in document order), all with
// the base seed. A failing cell is marked and the sweep continues. Returns
// the outcome matrix, also written to <out_dir>/<sweep_id>/sweep.json. An
// empty grid is a no-op.
nlohmann::ordered_json cmd_sweep(const SweepRequest& request);

struct GenbankRequest {
  Topic topic;
  LlmParams llm;
  fs::path out_path;
  bool force = false;
  int per_stance = 10;
  std::shared_ptr<ChatClient> client;
};

// Generates per_stance reasons for every stance (emotional tone at |s| = 2)
// and writes the bank only after all of them succeed. Throws AlreadyExists
// when out_path exists and force is false.
ReasonBank cmd_genbank(const GenbankRequest& request);

nlohmann::ordered_json regression_to_json(const RegressionFit& fit);

}  // namespace echosim
