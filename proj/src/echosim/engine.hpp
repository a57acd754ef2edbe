#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "echosim/domain.hpp"
#include "echosim/update.hpp"

namespace echosim {

// One agent-update event.
struct TurnRecord {
  int trial = 0;
  int turn = 0;  // 1-based
  int agent_id = 0;
  StanceValue stance_before = 0;
  std::vector<int> partner_ids;
  std::vector<StanceValue> partner_stances;
  StanceValue stance_after = 0;
  std::string reason_before;
  std::string reason_after;
  UpdateStatus update_status = UpdateStatus::kOk;

  bool operator==(const TurnRecord&) const = default;
};

using Histogram = std::map<StanceValue, int>;

struct TrialResult {
  int trial = 0;
  Population initial;
  Population final_population;
  std::vector<TurnRecord> records;
  std::vector<Histogram> histograms;  // index 0 is the initial state
  int parse_fallbacks = 0;
  std::optional<std::string> error;
  std::string error_kind;  // "transport", "request", "config" or "internal" when error is set
};

struct StanceSummary {
  StanceValue value = 0;
  std::string label;
  double mean = 0.0;
  double stddev = 0.0;
};

struct RunResult {
  RunConfig config;
  std::vector<TrialResult> trials;
  // Final-histogram mean and population standard deviation per stance over
  // the trials that completed, in scale order.
  std::vector<StanceSummary> summary;

  bool ok() const;
};

// Receives each completed turn's records, ordered by agent id. Called from
// the thread running that trial.
using RecordSink = std::function<void(int trial, std::span<const TurnRecord> turn_records)>;

struct ExecutionOptions {
  int workers = 1;
  RecordSink sink;
};

// Runs Algorithm-style synchronous discussion for one trial: every turn reads
// the previous turn's snapshot, and the new population replaces it only after
// all M updates. Randomness comes from per-(trial, turn, agent, purpose)
// streams, so results do not depend on `workers`. Throws whatever the updater
// throws, after flushing completed turns to the sink.
TrialResult run_trial(const RunConfig& config, int trial_index, OpinionUpdater& updater,
                      const ExecutionOptions& options = {});

// Runs config.trials trials (in parallel when workers > 1). A failing trial
// is recorded with its error and partial records; the others still run.
RunResult run_experiment(const RunConfig& config, OpinionUpdater& updater,
                         const ExecutionOptions& options = {});

// The engine configured by `config`. For the LLM engine `client` overrides
// the HTTP client built from config.llm.
std::unique_ptr<OpinionUpdater> make_updater(const RunConfig& config,
                                             std::shared_ptr<ChatClient> client = nullptr);

std::vector<StanceSummary> summarize(const RunConfig& config, const std::vector<TrialResult>& trials);

// "label: mean (std)" lines for stances with a non-zero mean.
std::string format_summary_table(const std::vector<StanceSummary>& summary);

// Calls fn(i) for i in [0, n) on up to `workers` threads. The first exception
// thrown is rethrown after all workers stop.
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

}  // namespace echosim
