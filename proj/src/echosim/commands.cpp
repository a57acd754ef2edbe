#include "echosim/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <regex>
#include <sstream>

#include "echosim/assets.hpp"
#include "echosim/errors.hpp"
#include "echosim/io.hpp"
#include "echosim/log.hpp"
#include "echosim/template.hpp"

#ifndef ECHOSIM_VERSION
#define ECHOSIM_VERSION "0.0.0"
#endif

namespace echosim {
namespace {

using ojson = nlohmann::ordered_json;

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string hex8(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%08llx", static_cast<unsigned long long>(v & 0xffffffffULL));
  return buf;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Picks <base>, <base>-2, <base>-3, ... whichever does not exist yet.
std::string unique_id(const fs::path& dir, const std::string& base) {
  if (!fs::exists(dir / base)) return base;
  for (int i = 2;; ++i) {
    auto candidate = base + "-" + std::to_string(i);
    if (!fs::exists(dir / candidate)) return candidate;
  }
}

ojson histogram_to_json(const Histogram& h) {
  ojson j = ojson::object();
  for (auto it = h.rbegin(); it != h.rend(); ++it) j[std::to_string(it->first)] = it->second;
  return j;
}

// Most frequent label; ties resolved toward polarization, then unification.
Outcome majority_outcome(const std::vector<Outcome>& outcomes) {
  int counts[3] = {0, 0, 0};
  for (auto o : outcomes) counts[static_cast<int>(o)]++;
  Outcome best = Outcome::kMixed;
  int best_count = -1;
  for (auto o : {Outcome::kPolarization, Outcome::kUnification, Outcome::kMixed}) {
    if (counts[static_cast<int>(o)] > best_count) {
      best = o;
      best_count = counts[static_cast<int>(o)];
    }
  }
  return best;
}

ojson dispersion_to_json(const Dispersion& d) {
  return {{"mean_stance", d.mean_stance},
          {"stddev", d.stddev},
          {"share_pos2", d.share_pos2},
          {"share_neg2", d.share_neg2},
          {"max_share", d.max_share}};
}

struct LoadedLogs {
  std::vector<TurnRecord> records;
  std::size_t skipped = 0;
  std::optional<nlohmann::json> manifest;
};

LoadedLogs load_logs(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("log directory " + dir.string() + " does not exist");
  LoadedLogs out;
  if (fs::exists(dir / "manifest.json")) {
    try {
      out.manifest = read_json_file(dir / "manifest.json");
    } catch (const Error& e) {
      log::warn(std::string("ignoring unreadable manifest: ") + e.what());
    }
  }
  static const std::regex kTrialFile(R"(trial_(\d+)\.jsonl)");
  std::vector<std::pair<int, fs::path>> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const auto name = entry.path().filename().string();
    if (std::regex_match(name, m, kTrialFile)) files.emplace_back(std::stoi(m[1]), entry.path());
  }
  if (files.empty()) throw IoError("no trial_*.jsonl logs in " + dir.string());
  std::sort(files.begin(), files.end());

  for (const auto& [_, path] : files) {
    std::ifstream in(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        out.records.push_back(record_from_json(nlohmann::json::parse(line)));
      } catch (const std::exception& e) {
        ++out.skipped;
        log::warn(path.filename().string() + ":" + std::to_string(lineno) + ": skipping corrupt record (" +
                  e.what() + ")");
      }
    }
  }
  return out;
}

struct TrialStats {
  std::vector<int> trials;
  std::vector<Histogram> finals;
  std::vector<Outcome> outcomes;
};

TrialStats final_stats(const std::vector<TurnRecord>& records, const OutcomeThresholds& thresholds) {
  TrialStats s;
  for (const auto& [trial, series] : histogram_series(records)) {
    if (series.empty()) continue;
    s.trials.push_back(trial);
    s.finals.push_back(series.back());
    s.outcomes.push_back(classify_outcome(series.back(), thresholds));
  }
  return s;
}

ojson comparison_entry(const fs::path& dir, const LoadedLogs& logs, const OutcomeThresholds& thresholds) {
  const auto stats = final_stats(logs.records, thresholds);
  ojson j;
  j["log_dir"] = dir.string();
  if (logs.manifest && logs.manifest->contains("config")) {
    const auto& cfg = logs.manifest->at("config");
    if (cfg.contains("sampler")) j["alpha"] = cfg["sampler"].value("alpha", 0.0);
  }
  ojson trials = ojson::array();
  double sd_sum = 0.0;
  for (std::size_t i = 0; i < stats.trials.size(); ++i) {
    const auto d = dispersion(stats.finals[i]);
    sd_sum += d.stddev;
    auto t = dispersion_to_json(d);
    t["trial"] = stats.trials[i];
    t["outcome"] = to_string(stats.outcomes[i]);
    trials.push_back(t);
  }
  j["trials"] = trials;
  j["mean_stddev"] = stats.trials.empty() ? 0.0 : sd_sum / static_cast<double>(stats.trials.size());
  return j;
}

ojson regression_or_error(const std::vector<TransitionSample>& samples, bool standardize) {
  try {
    return regression_to_json(fit_transitions(samples, standardize));
  } catch (const DegenerateFit& e) {
    return {{"error", e.what()}};
  }
}

}  // namespace

ojson regression_to_json(const RegressionFit& f) {
  ojson j;
  j["w_before"] = f.w_before;
  j["w_around"] = f.w_around;
  j["intercept"] = f.intercept;
  j["ratio"] = f.ratio ? ojson(*f.ratio) : ojson(nullptr);
  j["r2"] = f.r2;
  j["pearson_r"] = f.pearson_r;
  j["n_samples"] = f.n_samples;
  return j;
}

RunOutput cmd_run(const RunRequest& req) {
  const auto& config = req.config;
  if (auto violations = validate_config(config); !violations.empty()) {
    std::vector<std::string> lines;
    for (const auto& v : violations) lines.push_back(v.to_string());
    throw ValidationError(std::move(lines));
  }
  auto updater = make_updater(config, req.client);

  const auto snapshot = config_to_json(config);
  RunOutput out;
  fs::create_directories(req.out_dir);
  out.run_id = req.run_id ? *req.run_id
                          : unique_id(req.out_dir, "run-" + std::to_string(config.seed) + "-" +
                                                       hex8(fnv1a(snapshot.dump())));
  out.run_dir = req.out_dir / out.run_id;
  if (req.run_id && fs::exists(out.run_dir / "manifest.json")) {
    throw AlreadyExists("run directory " + out.run_dir.string() + " already holds a run");
  }
  fs::create_directories(out.run_dir);

  ojson manifest;
  manifest["run_id"] = out.run_id;
  manifest["created_at"] = utc_timestamp();
  manifest["seed"] = config.seed;
  manifest["engine"] = {{"kind", to_string(config.engine_kind)},
                        {"preset", config.preset},
                        {"model", config.engine_kind == EngineKind::kLlm ? config.llm.model : ""}};
  manifest["version"] = ECHOSIM_VERSION;
  manifest["config"] = snapshot;
  write_text_file(out.run_dir / "manifest.json", manifest.dump(2) + "\n");

  std::vector<std::ofstream> logs(config.trials);
  for (int t = 0; t < config.trials; ++t) {
    const auto path = out.run_dir / ("trial_" + std::to_string(t) + ".jsonl");
    logs[t].open(path, std::ios::binary | std::ios::trunc);
    if (!logs[t]) throw IoError("cannot write " + path.string());
  }
  ExecutionOptions exec;
  exec.workers = std::max(1, req.workers);
  exec.sink = [&logs](int trial, std::span<const TurnRecord> records) {
    auto& os = logs[trial];
    for (const auto& r : records) os << record_to_line(r) << '\n';
    os.flush();
  };
  out.result = run_experiment(config, *updater, exec);
  for (auto& os : logs) os.close();

  ojson trials = ojson::array();
  std::vector<Outcome> outcomes;
  for (const auto& t : out.result.trials) {
    ojson j;
    j["trial"] = t.trial;
    if (t.error) {
      j["error"] = *t.error;
      j["error_kind"] = t.error_kind;
      j["records_written"] = t.records.size();
    } else {
      const auto outcome = classify_outcome(t.histograms.back());
      outcomes.push_back(outcome);
      j["final_histogram"] = histogram_to_json(t.histograms.back());
      j["outcome"] = to_string(outcome);
      j["parse_fallbacks"] = t.parse_fallbacks;
    }
    trials.push_back(j);
  }
  ojson stances = ojson::array();
  for (const auto& s : out.result.summary) {
    stances.push_back({{"value", s.value}, {"label", s.label}, {"mean", s.mean}, {"std", s.stddev}});
  }
  out.table = format_summary_table(out.result.summary);
  out.summary["run_id"] = out.run_id;
  out.summary["run_dir"] = out.run_dir.string();
  out.summary["ok"] = out.result.ok();
  out.summary["outcome"] = outcomes.empty() ? ojson(nullptr) : ojson(to_string(majority_outcome(outcomes)));
  out.summary["trials"] = trials;
  out.summary["final_distribution"] = stances;
  out.summary["table"] = out.table;
  write_text_file(out.run_dir / "summary.json", out.summary.dump(2) + "\n");
  return out;
}

ojson cmd_analyze(const fs::path& log_dir, const AnalyzeOptions& options) {
  const auto logs = load_logs(log_dir);
  const auto& records = logs.records;

  ojson report;
  report["log_dir"] = log_dir.string();
  report["n_records"] = records.size();
  report["skipped_records"] = logs.skipped;

  const auto stats = final_stats(records, options.thresholds);
  report["outcome"] = stats.outcomes.empty() ? ojson(nullptr)
                                             : ojson(to_string(majority_outcome(stats.outcomes)));
  ojson per_trial = ojson::array();
  for (std::size_t i = 0; i < stats.trials.size(); ++i) {
    auto j = dispersion_to_json(dispersion(stats.finals[i]));
    j["trial"] = stats.trials[i];
    j["outcome"] = to_string(stats.outcomes[i]);
    j["final_histogram"] = histogram_to_json(stats.finals[i]);
    per_trial.push_back(j);
  }
  report["trials"] = per_trial;

  const auto series = histogram_series(records);
  ojson hs = ojson::object();
  std::string hist_csv = "trial,turn,s_neg2,s_neg1,s_0,s_pos1,s_pos2\n";
  for (const auto& [trial, hists] : series) {
    ojson arr = ojson::array();
    for (std::size_t k = 0; k < hists.size(); ++k) {
      arr.push_back(histogram_to_json(hists[k]));
      hist_csv += std::to_string(trial) + "," + std::to_string(k);
      for (StanceValue s = kMinStance; s <= kMaxStance; ++s) {
        const auto it = hists[k].find(s);
        hist_csv += "," + std::to_string(it == hists[k].end() ? 0 : it->second);
      }
      hist_csv += "\n";
    }
    hs[std::to_string(trial)] = arr;
  }
  report["histogram_series"] = hs;

  const auto samples = extract_samples(records);
  report["regression"] = regression_or_error(samples, options.standardize);
  report["regression"]["standardized"] = options.standardize;
  report["regression_raw"] = regression_or_error(samples, false);

  const auto lengths = reason_length_series(records);
  ojson lj;
  std::string len_csv = "trial,turn,mean_words\n";
  char buf[64];
  for (const auto& [trial, s] : lengths.per_trial) {
    lj["per_trial"][std::to_string(trial)] = s;
    for (std::size_t k = 0; k < s.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%d,%zu,%.6f\n", trial, k, s[k]);
      len_csv += buf;
    }
  }
  lj["mean"] = lengths.mean;
  for (std::size_t k = 0; k < lengths.mean.size(); ++k) {
    std::snprintf(buf, sizeof buf, "mean,%zu,%.6f\n", k, lengths.mean[k]);
    len_csv += buf;
  }
  report["reason_lengths"] = lj;

  ojson clusters = ojson::array();
  if (options.embedder) {
    auto embedder = make_embedder(*options.embedder);
    std::map<int, int> last_turn;
    for (const auto& r : records) last_turn[r.trial] = std::max(last_turn[r.trial], r.turn);
    for (const auto& [trial, final_turn] : last_turn) {
      for (int turn : {0, final_turn}) {
        std::vector<std::string> texts;
        std::vector<int> ids;
        for (const auto& r : records) {
          if (r.trial != trial) continue;
          if (turn == 0 && r.turn == 1) {
            texts.push_back(r.reason_before);
            ids.push_back(r.agent_id);
          } else if (turn > 0 && r.turn == turn) {
            texts.push_back(r.reason_after);
            ids.push_back(r.agent_id);
          }
        }
        const auto found = cluster_reasons(texts, *embedder, options.cluster_threshold);
        ojson cj;
        cj["trial"] = trial;
        cj["turn"] = turn;
        cj["n_clusters"] = found.size();
        ojson members = ojson::array();
        for (const auto& c : found) {
          std::vector<int> agents;
          for (int idx : c) agents.push_back(ids[idx]);
          members.push_back(agents);
        }
        cj["clusters"] = members;
        clusters.push_back(cj);
      }
    }
  }
  report["clusters"] = clusters;

  if (options.compare_dir) {
    const auto other = load_logs(*options.compare_dir);
    report["comparison"] = {{"a", comparison_entry(log_dir, logs, options.thresholds)},
                            {"b", comparison_entry(*options.compare_dir, other, options.thresholds)}};
  }

  const auto out_dir = options.out_dir.value_or(log_dir);
  write_text_file(out_dir / "report.json", report.dump(2) + "\n");
  write_text_file(out_dir / "histogram_per_turn.csv", hist_csv);
  write_text_file(out_dir / "length_per_turn.csv", len_csv);
  return report;
}

ojson cmd_sweep(const SweepRequest& req) {
  ojson result;
  result["cells"] = ojson::array();
  if (!req.grid.is_object()) throw ConfigError("sweep grid must be an object of key -> list");

  std::vector<std::pair<std::string, std::vector<ojson>>> axes;
  std::size_t n_cells = req.grid.empty() ? 0 : 1;
  for (const auto& [key, values] : req.grid.items()) {
    if (!values.is_array()) throw ConfigError("sweep grid values for '" + key + "' must be a list");
    axes.emplace_back(key, std::vector<ojson>(values.begin(), values.end()));
    n_cells *= values.size();
  }
  result["n_cells"] = n_cells;
  if (n_cells == 0) return result;

  const std::string sweep_id =
      req.sweep_id ? *req.sweep_id : unique_id(req.out_dir, "sweep-" + hex8(fnv1a(req.grid.dump())));
  const auto sweep_dir = req.out_dir / sweep_id;
  fs::create_directories(sweep_dir);
  result["sweep_id"] = sweep_id;

  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    ojson params = ojson::object();
    nlohmann::json doc = req.base_config;
    std::size_t rest = cell;
    for (auto it = axes.rbegin(); it != axes.rend(); ++it) {
      const auto& [key, values] = *it;
      const auto& v = values[rest % values.size()];
      rest /= values.size();
      params[key] = v;
    }
    ojson entry;
    char name[32];
    std::snprintf(name, sizeof name, "cell_%03zu", cell);
    entry["cell"] = name;
    // Re-emit params in grid order.
    ojson ordered = ojson::object();
    for (const auto& [key, _] : axes) ordered[key] = params[key];
    entry["params"] = ordered;
    try {
      for (const auto& [key, v] : ordered.items()) {
        const std::string k = key == "persona" ? "persona_preset" : key;
        apply_override(doc, k, nlohmann::json::parse(v.dump()));
      }
      RunRequest run;
      run.config = config_from_json(doc, req.base_dir);
      run.out_dir = sweep_dir;
      run.run_id = name;
      run.workers = req.workers;
      run.client = req.client;
      auto out = cmd_run(run);

      std::vector<TurnRecord> all;
      double sd_sum = 0.0;
      int done = 0;
      for (const auto& t : out.result.trials) {
        all.insert(all.end(), t.records.begin(), t.records.end());
        if (!t.error) {
          sd_sum += dispersion(t.histograms.back()).stddev;
          ++done;
        }
      }
      entry["status"] = out.result.ok() ? "ok" : "failed";
      entry["outcome"] = out.summary["outcome"];
      entry["dispersion"] = done ? sd_sum / done : 0.0;
      entry["final_distribution"] = out.summary["final_distribution"];
      entry["regression"] = regression_or_error(extract_samples(all), true);
      entry["run_dir"] = out.run_dir.string();
    } catch (const std::exception& e) {
      log::warn(std::string(name) + " failed: " + e.what());
      entry["status"] = "failed";
      entry["error"] = e.what();
    }
    result["cells"].push_back(entry);
  }
  write_text_file(sweep_dir / "sweep.json", result.dump(2) + "\n");
  return result;
}

ReasonBank cmd_genbank(const GenbankRequest& req) {
  if (fs::exists(req.out_path) && !req.force) {
    throw AlreadyExists(req.out_path.string() + " exists; pass --force to overwrite");
  }
  std::shared_ptr<ChatClient> client = req.client;
  if (!client) {
    auto opts = HttpChatClient::options_from_env(req.llm.endpoint, req.llm.api_key_env);
    opts.max_attempts = req.llm.transport_attempts;
    opts.max_in_flight = req.llm.max_in_flight;
    opts.debug = req.llm.debug;
    client = std::make_shared<HttpChatClient>(std::move(opts));
  }
  auto tmpl_text = read_text_file(asset_dir() / "prompts" / ("genbank_" + req.topic.language_tag + ".txt"));
  if (!tmpl_text.empty() && tmpl_text.back() == '\n') tmpl_text.pop_back();

  ReasonBank bank;
  bank.topic_id = req.topic.id;
  for (const auto& entry : req.topic.scale.entries()) {
    TemplateContext tc;
    tc.values["question"] = req.topic.question;
    tc.values["stance"] = entry.label;
    tc.flags["emotional"] = std::abs(entry.value) == kMaxStance;
    ChatRequest chat;
    chat.model = req.llm.model;
    chat.temperature = req.llm.temperature;
    chat.messages.push_back({"user", render_template(tmpl_text, tc)});

    auto& reasons = bank.reasons[entry.value];
    for (int i = 0; i < req.per_stance; ++i) {
      std::string reason;
      for (int attempt = 0; attempt < std::max(1, req.llm.parse_retries) && reason.empty(); ++attempt) {
        reason = client->complete(chat).content;
        const auto b = reason.find_first_not_of(" \t\r\n\"");
        const auto e = reason.find_last_not_of(" \t\r\n\"");
        reason = b == std::string::npos ? "" : reason.substr(b, e - b + 1);
      }
      if (reason.empty()) throw Error("empty reason returned for stance '" + entry.label + "'");
      reasons.push_back(std::move(reason));
    }
  }
  write_text_file(req.out_path, reason_bank_to_json(bank).dump(2) + "\n");
  return bank;
}

}  // namespace echosim
