#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace echosim {

class Rng;

using StanceValue = int;

inline constexpr StanceValue kMinStance = -2;
inline constexpr StanceValue kMaxStance = 2;
inline constexpr int kStanceCount = kMaxStance - kMinStance + 1;

struct StanceEntry {
  std::string label;
  StanceValue value = 0;

  bool operator==(const StanceEntry&) const = default;
};

// Five labelled points covering -2..2. Entry order is the presentation order
// used in prompts (topics list them from +2 down to -2).
class StanceScale {
 public:
  StanceScale() = default;

  // Throws ConfigError when the entries violate the scale invariants.
  static StanceScale from_entries(std::vector<StanceEntry> entries);

  const std::vector<StanceEntry>& entries() const noexcept { return entries_; }
  bool contains(StanceValue v) const noexcept;
  const std::string& label_of(StanceValue v) const;
  std::optional<StanceValue> value_of(std::string_view label) const;
  std::vector<StanceValue> values_ascending() const;

  bool operator==(const StanceScale&) const = default;

 private:
  explicit StanceScale(std::vector<StanceEntry> entries) : entries_(std::move(entries)) {}
  std::vector<StanceEntry> entries_;
};

struct Topic {
  std::string id;
  std::string question;
  StanceScale scale;
  std::string language_tag = "en";
};

struct Opinion {
  StanceValue stance = 0;
  std::string reason;

  bool operator==(const Opinion&) const = default;
};

struct Agent {
  int id = 0;
  std::string name;
  std::optional<std::string> persona;
  Opinion opinion;

  bool operator==(const Agent&) const = default;
};

struct Population {
  std::vector<Agent> agents;
  int turn = 0;

  std::vector<StanceValue> stances() const;
  bool operator==(const Population&) const = default;
};

// Ten or so fixture reasons per stance value.
struct ReasonBank {
  std::string topic_id;
  std::map<StanceValue, std::vector<std::string>> reasons;
};

enum class SamplerKind { kSigmoid, kPowerlaw };

struct SamplerParams {
  SamplerKind kind = SamplerKind::kSigmoid;
  double alpha = 0.5;
  double beta = 1.0;
  double epsilon = 1e-6;
};

enum class Rounding { kNearest, kStochastic };

struct SurrogateParams {
  double w_before = 0.724;
  double w_around = 0.526;
  double bias = 0.0;
  double noise_sigma = 0.3;
  Rounding rounding = Rounding::kNearest;
};

struct LlmParams {
  std::string model = "gpt-4-0613";
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 1.0;
  std::optional<int> max_tokens;
  int parse_retries = 3;
  int transport_attempts = 5;
  int max_in_flight = 8;
  double timeout_s = 60.0;
  bool strict_parse = false;
  bool debug = false;
};

enum class EngineKind { kSurrogate, kLlm };
enum class OpinionOrder { kSampled, kShuffled, kSorted };
enum class UpdateMode { kSynchronous, kAsynchronous };

struct DistributionEntry {
  StanceValue stance = 0;
  double fraction = 0.0;

  bool operator==(const DistributionEntry&) const = default;
};

struct RunConfig {
  std::string topic_ref;
  Topic topic;
  std::string reason_bank_ref;
  ReasonBank reason_bank;
  std::string prompt_template;  // empty: the bundled template for topic.language_tag

  int M = 100;
  int N = 5;
  int K = 10;
  int trials = 3;
  std::uint64_t seed = 0;

  SamplerParams sampler;
  EngineKind engine_kind = EngineKind::kSurrogate;
  std::string preset = "gpt4-en";
  SurrogateParams surrogate;
  LlmParams llm;

  bool reasons_enabled = true;
  std::optional<std::string> persona;
  std::vector<DistributionEntry> initial_distribution;  // empty means uniform
  OpinionOrder opinion_order = OpinionOrder::kSampled;
  double frequency_penalty = 0.0;
  UpdateMode update_mode = UpdateMode::kSynchronous;
};

struct Violation {
  std::string field;
  std::string rule;

  std::string to_string() const { return field + ": " + rule; }
};

std::vector<Violation> validate_config(const RunConfig& config);

// Uniform distribution over the scale when `config.initial_distribution` is
// empty.
std::vector<DistributionEntry> effective_distribution(const RunConfig& config);

// Largest-remainder allocation of `total` over the distribution; ties on the
// remainder go to the lower stance value. Result is keyed by stance value.
std::map<StanceValue, int> allocate_counts(const std::vector<DistributionEntry>& distribution,
                                           int total);

Population build_population(const RunConfig& config, const ReasonBank& reasons, Rng& rng);

// Deterministic "First Last" name drawn from the bundled list.
std::string generate_name(Rng& rng);

// Stance value -> count, with every scale value present.
std::map<StanceValue, int> histogram(const std::vector<StanceValue>& stances);

std::string_view to_string(SamplerKind k);
std::string_view to_string(EngineKind k);
std::string_view to_string(OpinionOrder k);
std::string_view to_string(UpdateMode k);
std::string_view to_string(Rounding k);

}  // namespace echosim
