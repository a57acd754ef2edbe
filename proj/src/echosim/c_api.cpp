#include "echosim/echosim.h"

#include <cstring>
#include <exception>
#include <string>

#include "echosim/commands.hpp"
#include "echosim/errors.hpp"
#include "echosim/io.hpp"
#include "echosim/log.hpp"

#ifndef ECHOSIM_VERSION
#define ECHOSIM_VERSION "0.0.0"
#endif

struct es_config {
  nlohmann::json doc;
  std::filesystem::path base_dir;
};

struct es_run {
  std::string id;
  std::string dir;
  std::string summary;
  std::string table;
};

namespace {

thread_local std::string g_last_error;

es_status fail(es_status code, std::string message) {
  g_last_error = std::move(message);
  return code;
}

char* dup_string(const std::string& s) {
  auto* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Maps the in-flight exception onto a status code and records its message.
es_status translate_current() {
  try {
    throw;
  } catch (const echosim::ValidationError& e) {
    return fail(ES_ERR_VALIDATION, e.what());
  } catch (const echosim::ConfigError& e) {
    return fail(ES_ERR_CONFIG, e.what());
  } catch (const echosim::IoError& e) {
    return fail(ES_ERR_IO, e.what());
  } catch (const echosim::ParseFailure& e) {
    return fail(ES_ERR_PARSE, e.what());
  } catch (const echosim::TransportError& e) {
    return fail(ES_ERR_TRANSPORT, e.what());
  } catch (const echosim::RequestError& e) {
    return fail(ES_ERR_REQUEST, e.what());
  } catch (const echosim::DegenerateFit& e) {
    return fail(ES_ERR_DEGENERATE, e.what());
  } catch (const echosim::AlreadyExists& e) {
    return fail(ES_ERR_EXISTS, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(ES_ERR_CONFIG, std::string("malformed JSON: ") + e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(ES_ERR_IO, e.what());
  } catch (const std::exception& e) {
    return fail(ES_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(ES_ERR_INTERNAL, "unknown error");
  }
}

template <typename F>
es_status guarded(F&& body) {
  g_last_error.clear();
  try {
    return body();
  } catch (...) {
    return translate_current();
  }
}

es_status status_for_kind(const std::string& kind) {
  if (kind == "transport") return ES_ERR_TRANSPORT;
  if (kind == "request") return ES_ERR_REQUEST;
  if (kind == "config") return ES_ERR_CONFIG;
  return ES_ERR_INTERNAL;
}

}  // namespace

extern "C" {

const char* es_version(void) { return ECHOSIM_VERSION; }

const char* es_last_error(void) { return g_last_error.c_str(); }

void es_string_free(char* s) { std::free(s); }

void es_set_log_level(int level) {
  if (level < 0) level = 0;
  if (level > 3) level = 3;
  echosim::log::set_level(static_cast<echosim::log::Level>(level));
}

es_status es_config_load(const char* path, es_config** out) {
  if (!path || !out) return fail(ES_ERR_INVALID_ARGUMENT, "path and out must be non-null");
  return guarded([&] {
    auto doc = echosim::read_json_file(path);
    auto base = std::filesystem::absolute(path).parent_path();
    echosim::config_from_json(doc, base);  // surface bad keys and refs early
    *out = new es_config{std::move(doc), std::move(base)};
    return ES_OK;
  });
}

es_status es_config_from_json(const char* json, const char* base_dir, es_config** out) {
  if (!json || !out) return fail(ES_ERR_INVALID_ARGUMENT, "json and out must be non-null");
  return guarded([&] {
    auto doc = nlohmann::json::parse(json);
    std::filesystem::path base = base_dir ? base_dir : "";
    echosim::config_from_json(doc, base);
    *out = new es_config{std::move(doc), std::move(base)};
    return ES_OK;
  });
}

es_status es_config_set(es_config* config, const char* key, const char* value) {
  if (!config || !key || !value) return fail(ES_ERR_INVALID_ARGUMENT, "config, key and value must be non-null");
  return guarded([&] {
    auto doc = config->doc;
    echosim::apply_override(doc, key, std::string(value));
    echosim::config_from_json(doc, config->base_dir);
    config->doc = std::move(doc);
    return ES_OK;
  });
}

es_status es_config_validate(const es_config* config, char** violations_json) {
  if (!config) return fail(ES_ERR_INVALID_ARGUMENT, "config must be non-null");
  return guarded([&] {
    const auto c = echosim::config_from_json(config->doc, config->base_dir);
    const auto violations = echosim::validate_config(c);
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    std::string message = "invalid config";
    for (const auto& v : violations) {
      arr.push_back({{"field", v.field}, {"rule", v.rule}});
      message += "\n  " + v.to_string();
    }
    if (violations_json) *violations_json = dup_string(arr.dump());
    return violations.empty() ? ES_OK : fail(ES_ERR_VALIDATION, message);
  });
}

es_status es_config_to_json(const es_config* config, char** out_json) {
  if (!config || !out_json) return fail(ES_ERR_INVALID_ARGUMENT, "config and out_json must be non-null");
  return guarded([&] {
    const auto c = echosim::config_from_json(config->doc, config->base_dir);
    *out_json = dup_string(echosim::config_to_json(c).dump(2));
    return ES_OK;
  });
}

void es_config_free(es_config* config) { delete config; }

es_status es_run_experiment(const es_config* config, const char* out_dir, const char* run_id, int workers,
                            es_run** out) {
  if (!config || !out_dir || !out) return fail(ES_ERR_INVALID_ARGUMENT, "config, out_dir and out must be non-null");
  return guarded([&] {
    echosim::RunRequest req;
    req.config = echosim::config_from_json(config->doc, config->base_dir);
    req.out_dir = out_dir;
    if (run_id && *run_id) req.run_id = run_id;
    req.workers = workers;
    auto output = echosim::cmd_run(req);
    *out = new es_run{output.run_id, output.run_dir.string(), output.summary.dump(2), output.table};
    for (const auto& t : output.result.trials) {
      if (t.error) return fail(status_for_kind(t.error_kind), "trial " + std::to_string(t.trial) + ": " + *t.error);
    }
    return ES_OK;
  });
}

const char* es_run_id(const es_run* run) { return run ? run->id.c_str() : ""; }
const char* es_run_dir(const es_run* run) { return run ? run->dir.c_str() : ""; }
const char* es_run_summary_json(const es_run* run) { return run ? run->summary.c_str() : ""; }
const char* es_run_table(const es_run* run) { return run ? run->table.c_str() : ""; }
void es_run_free(es_run* run) { delete run; }

es_status es_analyze(const char* log_dir, const char* options_json, char** report_json) {
  if (!log_dir) return fail(ES_ERR_INVALID_ARGUMENT, "log_dir must be non-null");
  return guarded([&] {
    echosim::AnalyzeOptions opts;
    if (options_json && *options_json) {
      const auto j = nlohmann::json::parse(options_json);
      opts.standardize = j.value("standardize", true);
      if (j.contains("embedder") && !j["embedder"].is_null()) opts.embedder = j["embedder"].get<std::string>();
      opts.cluster_threshold = j.value("cluster_threshold", opts.cluster_threshold);
      if (j.contains("compare") && !j["compare"].is_null()) opts.compare_dir = j["compare"].get<std::string>();
      if (j.contains("out_dir") && !j["out_dir"].is_null()) opts.out_dir = j["out_dir"].get<std::string>();
      opts.thresholds.unification = j.value("unification", opts.thresholds.unification);
      opts.thresholds.polarization = j.value("polarization", opts.thresholds.polarization);
    }
    const auto report = echosim::cmd_analyze(log_dir, opts);
    if (report_json) *report_json = dup_string(report.dump(2));
    return ES_OK;
  });
}

es_status es_sweep(const es_config* config, const char* grid_json, const char* out_dir, const char* sweep_id,
                   int workers, char** matrix_json) {
  if (!config || !grid_json || !out_dir) {
    return fail(ES_ERR_INVALID_ARGUMENT, "config, grid_json and out_dir must be non-null");
  }
  return guarded([&] {
    echosim::SweepRequest req;
    req.base_config = config->doc;
    req.base_dir = config->base_dir;
    req.grid = nlohmann::ordered_json::parse(grid_json);
    req.out_dir = out_dir;
    if (sweep_id && *sweep_id) req.sweep_id = sweep_id;
    req.workers = workers;
    const auto matrix = echosim::cmd_sweep(req);
    if (matrix_json) *matrix_json = dup_string(matrix.dump(2));
    return ES_OK;
  });
}

es_status es_genbank(const es_config* config, const char* out_path, int per_stance, int force, char** bank_json) {
  if (!config || !out_path) return fail(ES_ERR_INVALID_ARGUMENT, "config and out_path must be non-null");
  if (per_stance < 1) return fail(ES_ERR_INVALID_ARGUMENT, "per_stance must be >= 1");
  return guarded([&] {
    const auto c = echosim::config_from_json(config->doc, config->base_dir);
    echosim::GenbankRequest req;
    req.topic = c.topic;
    req.llm = c.llm;
    req.out_path = out_path;
    req.force = force != 0;
    req.per_stance = per_stance;
    const auto bank = echosim::cmd_genbank(req);
    if (bank_json) *bank_json = dup_string(echosim::reason_bank_to_json(bank).dump(2));
    return ES_OK;
  });
}

}  // extern "C"
