// echosim command-line front end. Talks to the library only through echosim.h.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "echosim/echosim.h"

namespace {

using json = nlohmann::ordered_json;

struct ConfigDeleter {
  void operator()(es_config* c) const { es_config_free(c); }
};
using ConfigPtr = std::unique_ptr<es_config, ConfigDeleter>;

struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { es_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

int report(es_status st) {
  if (st != ES_OK) std::cerr << "error: " << es_last_error() << "\n";
  return static_cast<int>(st);
}

// Flags shared by run and sweep; std::nullopt means "leave the config alone".
struct Overrides {
  std::map<std::string, std::string> values;
  std::vector<std::string> raw;  // --set key=value
};

void add_override_flags(CLI::App* app, Overrides& o) {
  auto flag = [&](const std::string& name, const std::string& key, const std::string& help) {
    app->add_option_function<std::string>(
        name, [&o, key](const std::string& v) { o.values[key] = v; }, help);
  };
  flag("--alpha", "alpha", "sampler alpha");
  flag("--beta", "beta", "power-law beta");
  flag("--sampler", "sampler", "sigmoid | powerlaw");
  flag("--N", "N", "partners per agent and turn");
  flag("--M", "M", "population size");
  flag("--K", "K", "number of turns");
  flag("--trials", "trials", "number of trials");
  flag("--seed", "seed", "root seed");
  flag("--engine", "engine", "surrogate | llm");
  flag("--preset", "preset", "surrogate weight preset");
  flag("--persona", "persona_preset", "stubborn | neutral | swayed");
  flag("--sigma", "noise_sigma", "surrogate noise sigma");
  flag("--rounding", "rounding", "nearest | stochastic");
  flag("--order", "opinion_order", "sampled | shuffled | sorted");
  flag("--frequency-penalty", "frequency_penalty", "LLM frequency penalty");
  flag("--update-mode", "update_mode", "synchronous | asynchronous");
  flag("--topic", "topic", "topic id or path");
  flag("--model", "model", "LLM model name");
  flag("--endpoint", "endpoint", "chat completions URL");
  app->add_option("--set", o.raw, "extra key=value override (repeatable)");
}

int load_config(const std::string& path, const Overrides& o, ConfigPtr& out) {
  es_config* raw = nullptr;
  const es_status st = path.empty() ? es_config_from_json("{}", nullptr, &raw) : es_config_load(path.c_str(), &raw);
  if (st != ES_OK) return report(st);
  out.reset(raw);
  for (const auto& [k, v] : o.values) {
    if (auto s = es_config_set(out.get(), k.c_str(), v.c_str()); s != ES_OK) return report(s);
  }
  for (const auto& kv : o.raw) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --set expects key=value, got '" << kv << "'\n";
      return ES_ERR_INVALID_ARGUMENT;
    }
    const auto key = kv.substr(0, eq);
    const auto value = kv.substr(eq + 1);
    if (auto s = es_config_set(out.get(), key.c_str(), value.c_str()); s != ES_OK) return report(s);
  }
  return ES_OK;
}

json parse_scalar(const std::string& s) {
  try {
    return json::parse(s);
  } catch (const json::exception&) {
    return s;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Echo-chamber simulation of opinionated generative agents"};
  app.require_subcommand(1);
  int verbosity = 0;
  app.add_flag("-v,--verbose", verbosity, "more logging (repeat for debug)");

  std::string config_path;
  std::string out_dir = "runs";
  std::string run_id;
  int workers = 1;
  Overrides overrides;

  auto* run = app.add_subcommand("run", "run an experiment and write logs");
  run->add_option("-c,--config", config_path, "config JSON")->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
  run->add_option("--run-id", run_id, "run directory name");
  run->add_option("-w,--workers", workers, "worker threads")->capture_default_str();
  add_override_flags(run, overrides);

  std::string log_dir;
  bool raw_fit = false;
  std::string embedder;
  double threshold = 0.9;
  std::string compare;
  std::string report_dir;
  auto* analyze = app.add_subcommand("analyze", "regression, outcomes and clustering for a run");
  analyze->add_option("log_dir", log_dir, "run directory")->required()->check(CLI::ExistingDirectory);
  analyze->add_flag("--raw", raw_fit, "fit on raw stances instead of z-scores");
  analyze->add_option("--embedder", embedder, "hash | http(s)://... | cmd:<command>");
  analyze->add_option("--threshold", threshold, "cosine threshold for clustering")->capture_default_str();
  analyze->add_option("--compare", compare, "second run directory")->check(CLI::ExistingDirectory);
  analyze->add_option("-o,--out", report_dir, "report directory (default: log_dir)");

  std::vector<std::string> grid_flags;
  std::string grid_file;
  std::string sweep_id;
  auto* sweep = app.add_subcommand("sweep", "one run per parameter grid cell");
  sweep->add_option("-c,--config", config_path, "base config JSON")->check(CLI::ExistingFile);
  sweep->add_option("--grid", grid_flags, "key=v1,v2,... (repeatable)");
  sweep->add_option("--grid-file", grid_file, "JSON object of key -> list")->check(CLI::ExistingFile);
  sweep->add_option("-o,--out", out_dir, "output directory")->capture_default_str();
  sweep->add_option("--sweep-id", sweep_id, "sweep directory name");
  sweep->add_option("-w,--workers", workers, "worker threads")->capture_default_str();
  add_override_flags(sweep, overrides);

  std::string bank_out;
  bool force = false;
  int per_stance = 10;
  auto* genbank = app.add_subcommand("genbank", "regenerate a reason bank through the LLM backend");
  genbank->add_option("-c,--config", config_path, "config JSON (topic, llm)")->check(CLI::ExistingFile);
  genbank->add_option("-o,--out", bank_out, "bank JSON path")->required();
  genbank->add_flag("--force", force, "overwrite an existing bank");
  genbank->add_option("--per-stance", per_stance, "reasons per stance")->capture_default_str();
  add_override_flags(genbank, overrides);

  CLI11_PARSE(app, argc, argv);
  es_set_log_level(verbosity >= 2 ? 0 : verbosity == 1 ? 1 : 2);

  if (*run) {
    ConfigPtr cfg;
    if (int rc = load_config(config_path, overrides, cfg); rc != ES_OK) return rc;
    es_run* result = nullptr;
    const es_status st = es_run_experiment(cfg.get(), out_dir.c_str(), run_id.empty() ? nullptr : run_id.c_str(),
                                           workers, &result);
    if (result) {
      std::cout << es_run_table(result);
      std::cerr << "logs: " << es_run_dir(result) << "\n";
      es_run_free(result);
    }
    return report(st);
  }

  if (*analyze) {
    json opts;
    opts["standardize"] = !raw_fit;
    if (!embedder.empty()) opts["embedder"] = embedder;
    opts["cluster_threshold"] = threshold;
    if (!compare.empty()) opts["compare"] = compare;
    if (!report_dir.empty()) opts["out_dir"] = report_dir;
    OwnedString out;
    const es_status st = es_analyze(log_dir.c_str(), opts.dump().c_str(), &out.p);
    if (st == ES_OK) std::cout << out.str() << "\n";
    return report(st);
  }

  if (*sweep) {
    ConfigPtr cfg;
    if (int rc = load_config(config_path, overrides, cfg); rc != ES_OK) return rc;
    json grid = json::object();
    if (!grid_file.empty()) {
      try {
        std::ifstream in(grid_file);
        grid = json::parse(in);
      } catch (const json::exception& e) {
        std::cerr << "error: " << grid_file << ": " << e.what() << "\n";
        return ES_ERR_CONFIG;
      }
    }
    for (const auto& g : grid_flags) {
      const auto eq = g.find('=');
      if (eq == std::string::npos) {
        std::cerr << "error: --grid expects key=v1,v2, got '" << g << "'\n";
        return ES_ERR_INVALID_ARGUMENT;
      }
      json values = json::array();
      std::string rest = g.substr(eq + 1);
      for (std::size_t start = 0; start <= rest.size();) {
        const auto comma = rest.find(',', start);
        const auto item = rest.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!item.empty()) values.push_back(parse_scalar(item));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      grid[g.substr(0, eq)] = values;
    }
    OwnedString out;
    const es_status st = es_sweep(cfg.get(), grid.dump().c_str(), out_dir.c_str(),
                                  sweep_id.empty() ? nullptr : sweep_id.c_str(), workers, &out.p);
    if (st == ES_OK) std::cout << out.str() << "\n";
    return report(st);
  }

  if (*genbank) {
    ConfigPtr cfg;
    if (int rc = load_config(config_path, overrides, cfg); rc != ES_OK) return rc;
    OwnedString out;
    const es_status st = es_genbank(cfg.get(), bank_out.c_str(), per_stance, force ? 1 : 0, &out.p);
    if (st == ES_OK) std::cerr << "wrote " << bank_out << "\n";
    return report(st);
  }
  return 0;
}
