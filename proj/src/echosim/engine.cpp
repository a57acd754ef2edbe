#include "echosim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "echosim/errors.hpp"
#include "echosim/rng.hpp"
#include "echosim/sampler.hpp"

namespace echosim {
namespace {

struct AgentUpdate {
  TurnRecord record;
  Opinion opinion;
};

AgentUpdate update_agent(const RunConfig& config, int trial, int turn, int agent_index,
                         const Population& source, OpinionUpdater& updater) {
  const auto stances = source.stances();
  const auto& self = source.agents[agent_index];

  auto sample_rng = Rng::stream(config.seed, trial, turn, agent_index, StreamPurpose::kSample);
  auto partners = sample_partners(agent_index, stances, config.N, config.sampler, sample_rng);

  std::vector<int> presented = partners;
  if (config.opinion_order == OpinionOrder::kShuffled) {
    auto order_rng = Rng::stream(config.seed, trial, turn, agent_index, StreamPurpose::kOrder);
    order_rng.shuffle(presented.begin(), presented.end());
  } else if (config.opinion_order == OpinionOrder::kSorted) {
    std::stable_sort(presented.begin(), presented.end(),
                     [&](int a, int b) { return stances[a] < stances[b]; });
  }

  UpdateContext ctx;
  ctx.topic = config.topic;
  ctx.self_opinion = self.opinion;
  ctx.persona = self.persona;
  ctx.reasons_enabled = config.reasons_enabled;
  for (int j : presented) ctx.partners.push_back({source.agents[j].name, source.agents[j].opinion});

  auto update_rng = Rng::stream(config.seed, trial, turn, agent_index, StreamPurpose::kUpdate);
  auto outcome = updater.update(ctx, update_rng);
  if (!config.topic.scale.contains(outcome.opinion.stance)) {
    throw Error("updater produced off-scale stance " + std::to_string(outcome.opinion.stance));
  }

  AgentUpdate out;
  auto& r = out.record;
  r.trial = trial;
  r.turn = turn;
  r.agent_id = self.id;
  r.stance_before = self.opinion.stance;
  r.partner_ids = presented;
  for (int j : presented) r.partner_stances.push_back(stances[j]);
  r.stance_after = outcome.opinion.stance;
  r.reason_before = self.opinion.reason;
  r.reason_after = outcome.opinion.reason;
  r.update_status = outcome.status;
  out.opinion = std::move(outcome.opinion);
  return out;
}

std::string format_count(double v) {
  char buf[32];
  if (std::abs(v - std::round(v)) < 1e-9) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.1f", v);
  }
  return buf;
}

}  // namespace

bool RunResult::ok() const {
  return std::none_of(trials.begin(), trials.end(), [](const auto& t) { return t.error.has_value(); });
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  workers = std::clamp(workers, 1, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex mu;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < n && !failed.load(); i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!first) first = std::current_exception();
            failed = true;
          }
        }
      });
    }
  }
  if (first) std::rethrow_exception(first);
}

TrialResult run_trial(const RunConfig& config, int trial_index, OpinionUpdater& updater,
                      const ExecutionOptions& options) {
  if (config.N > config.M - 1) throw ConfigError("N must be <= M-1");

  TrialResult result;
  result.trial = trial_index;
  auto init_rng = Rng::stream(config.seed, trial_index, 0, 0, StreamPurpose::kInit);
  result.initial = build_population(config, config.reason_bank, init_rng);
  result.histograms.push_back(histogram(result.initial.stances()));

  Population current = result.initial;
  const int m = config.M;
  for (int turn = 1; turn <= config.K; ++turn) {
    std::vector<TurnRecord> turn_records(m);
    if (config.update_mode == UpdateMode::kSynchronous) {
      const Population snapshot = current;
      Population next = current;
      parallel_for(m, options.workers, [&](int i) {
        auto u = update_agent(config, trial_index, turn, i, snapshot, updater);
        next.agents[i].opinion = std::move(u.opinion);
        turn_records[i] = std::move(u.record);
      });
      current = std::move(next);
    } else {
      // In-place sequential updates; later agents see earlier agents' new
      // opinions within the same turn.
      for (int i = 0; i < m; ++i) {
        auto u = update_agent(config, trial_index, turn, i, current, updater);
        current.agents[i].opinion = std::move(u.opinion);
        turn_records[i] = std::move(u.record);
      }
    }
    current.turn = turn;
    for (const auto& r : turn_records) {
      if (r.update_status == UpdateStatus::kParseFallback) ++result.parse_fallbacks;
    }
    if (options.sink) options.sink(trial_index, turn_records);
    result.records.insert(result.records.end(), std::make_move_iterator(turn_records.begin()),
                          std::make_move_iterator(turn_records.end()));
    result.histograms.push_back(histogram(current.stances()));
  }
  result.final_population = std::move(current);
  return result;
}

RunResult run_experiment(const RunConfig& config, OpinionUpdater& updater,
                         const ExecutionOptions& options) {
  RunResult out;
  out.config = config;
  out.trials.resize(config.trials);

  const int trial_workers = std::clamp(options.workers, 1, std::max(1, config.trials));
  ExecutionOptions inner = options;
  inner.workers = std::max(1, options.workers / trial_workers);

  parallel_for(config.trials, trial_workers, [&](int t) {
    // Completed turns are mirrored here so a failing trial keeps its prefix.
    TrialResult partial;
    partial.trial = t;
    ExecutionOptions per_trial = inner;
    per_trial.sink = [&](int trial, std::span<const TurnRecord> recs) {
      partial.records.insert(partial.records.end(), recs.begin(), recs.end());
      if (inner.sink) inner.sink(trial, recs);
    };
    try {
      out.trials[t] = run_trial(config, t, updater, per_trial);
    } catch (const TransportError& e) {
      partial.error = e.what();
      partial.error_kind = "transport";
      out.trials[t] = std::move(partial);
    } catch (const RequestError& e) {
      partial.error = e.what();
      partial.error_kind = "request";
      out.trials[t] = std::move(partial);
    } catch (const ConfigError& e) {
      partial.error = e.what();
      partial.error_kind = "config";
      out.trials[t] = std::move(partial);
    } catch (const std::exception& e) {
      partial.error = e.what();
      partial.error_kind = "internal";
      out.trials[t] = std::move(partial);
    }
  });
  out.summary = summarize(config, out.trials);
  return out;
}

std::vector<StanceSummary> summarize(const RunConfig& config, const std::vector<TrialResult>& trials) {
  std::vector<const TrialResult*> done;
  for (const auto& t : trials) {
    if (!t.error && !t.histograms.empty()) done.push_back(&t);
  }
  std::vector<StanceSummary> out;
  for (const auto& e : config.topic.scale.entries()) {
    StanceSummary s;
    s.value = e.value;
    s.label = e.label;
    if (!done.empty()) {
      double sum = 0.0;
      for (const auto* t : done) sum += t->histograms.back().at(e.value);
      s.mean = sum / static_cast<double>(done.size());
      double ss = 0.0;
      for (const auto* t : done) {
        const double d = t->histograms.back().at(e.value) - s.mean;
        ss += d * d;
      }
      s.stddev = std::sqrt(ss / static_cast<double>(done.size()));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::string format_summary_table(const std::vector<StanceSummary>& summary) {
  std::string out;
  for (const auto& s : summary) {
    if (s.mean <= 0.0) continue;
    char sd[32];
    std::snprintf(sd, sizeof sd, "%.1f", s.stddev);
    out += s.label + ": " + format_count(s.mean) + " (" + sd + ")\n";
  }
  return out;
}

std::unique_ptr<OpinionUpdater> make_updater(const RunConfig& config, std::shared_ptr<ChatClient> client) {
  if (config.engine_kind == EngineKind::kSurrogate) {
    return std::make_unique<SurrogateUpdater>(config.surrogate);
  }
  if (!client) {
    auto opts = HttpChatClient::options_from_env(config.llm.endpoint, config.llm.api_key_env);
    opts.max_attempts = config.llm.transport_attempts;
    opts.max_in_flight = config.llm.max_in_flight;
    opts.timeout = std::chrono::milliseconds(static_cast<long long>(config.llm.timeout_s * 1000.0));
    opts.debug = config.llm.debug;
    client = std::make_shared<HttpChatClient>(std::move(opts));
  }
  LlmUpdateParams p;
  p.model = config.llm.model;
  p.temperature = config.llm.temperature;
  p.frequency_penalty = config.frequency_penalty;
  p.max_tokens = config.llm.max_tokens;
  p.parse_retries = config.llm.parse_retries;
  p.strict_parse = config.llm.strict_parse;
  auto tmpl = config.prompt_template.empty() ? PromptTemplate::bundled(config.topic.language_tag)
                                             : PromptTemplate::from_file(config.prompt_template);
  return std::make_unique<LlmUpdater>(std::move(client), std::move(p), std::move(tmpl));
}

}  // namespace echosim
