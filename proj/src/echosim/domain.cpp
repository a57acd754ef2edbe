#include "echosim/domain.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <set>

#include "echosim/errors.hpp"
#include "echosim/rng.hpp"

namespace echosim {
namespace {

constexpr std::array<std::string_view, 48> kFirstNames = {
    "Aaron",   "Abigail", "Adrian",  "Alice",   "Amelia",  "Andrew",  "Benjamin", "Caleb",
    "Camila",  "Charlotte", "Chloe", "Daniel",  "David",   "Diego",   "Elena",    "Emily",
    "Ethan",   "Evelyn",  "Gabriel", "Grace",   "Hannah",  "Henry",   "Isaac",    "Isabella",
    "Jack",    "James",   "Jeremy",  "Julia",   "Kevin",   "Laura",   "Leo",      "Lucas",
    "Maria",   "Mason",   "Mia",     "Nathan",  "Nora",    "Olivia",  "Oscar",    "Priya",
    "Rachel",  "Ryan",    "Samuel",  "Sofia",   "Thomas",  "Victoria", "William", "Zoe"};

constexpr std::array<std::string_view, 48> kLastNames = {
    "Adams",    "Allen",    "Baker",    "Bennett",  "Brooks",   "Campbell", "Carter",  "Chen",
    "Clark",    "Collins",  "Cooper",   "Diaz",     "Evans",    "Fischer",  "Flores",  "Garcia",
    "Gomez",    "Green",    "Hall",     "Harris",   "Hughes",   "Jenkins",  "Johnson", "Kim",
    "Lee",      "Lewis",    "Lopez",    "Martinez", "Miller",   "Mitchell", "Morgan",  "Nguyen",
    "Nelson",   "Parker",   "Patel",    "Perez",    "Reed",     "Rivera",   "Roberts", "Sanchez",
    "Scott",    "Shah",     "Taylor",   "Torres",   "Turner",   "Walker",   "Wright",  "Young"};

}  // namespace

StanceScale StanceScale::from_entries(std::vector<StanceEntry> entries) {
  if (entries.size() != static_cast<std::size_t>(kStanceCount)) {
    throw ConfigError("stance scale must have exactly 5 entries");
  }
  std::set<StanceValue> values;
  std::set<std::string> labels;
  for (const auto& e : entries) {
    if (e.label.empty()) throw ConfigError("stance label must be non-empty");
    if (e.value < kMinStance || e.value > kMaxStance) {
      throw ConfigError("stance value " + std::to_string(e.value) + " outside -2..2");
    }
    if (!values.insert(e.value).second) {
      throw ConfigError("duplicate stance value " + std::to_string(e.value));
    }
    if (!labels.insert(e.label).second) throw ConfigError("duplicate stance label '" + e.label + "'");
  }
  return StanceScale(std::move(entries));
}

bool StanceScale::contains(StanceValue v) const noexcept {
  return std::any_of(entries_.begin(), entries_.end(), [v](const auto& e) { return e.value == v; });
}

const std::string& StanceScale::label_of(StanceValue v) const {
  for (const auto& e : entries_) {
    if (e.value == v) return e.label;
  }
  throw ConfigError("stance value " + std::to_string(v) + " not on scale");
}

std::optional<StanceValue> StanceScale::value_of(std::string_view label) const {
  for (const auto& e : entries_) {
    if (e.label == label) return e.value;
  }
  return std::nullopt;
}

std::vector<StanceValue> StanceScale::values_ascending() const {
  std::vector<StanceValue> out;
  for (const auto& e : entries_) out.push_back(e.value);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<StanceValue> Population::stances() const {
  std::vector<StanceValue> out;
  out.reserve(agents.size());
  for (const auto& a : agents) out.push_back(a.opinion.stance);
  return out;
}

std::vector<Violation> validate_config(const RunConfig& c) {
  std::vector<Violation> v;
  if (c.M <= 0) v.push_back({"M", "M must be > 0"});
  if (c.N < 1) v.push_back({"N", "N must be >= 1"});
  if (c.M > 0 && c.N > c.M - 1) v.push_back({"N", "N must be <= M-1"});
  if (c.K < 0) v.push_back({"K", "K must be >= 0"});
  if (c.trials <= 0) v.push_back({"trials", "trials must be > 0"});
  if (c.topic.question.empty()) v.push_back({"topic.question", "question must be non-empty"});
  if (c.topic.scale.entries().size() != static_cast<std::size_t>(kStanceCount)) {
    v.push_back({"topic.scale", "scale must have 5 entries covering -2..2"});
  }

  if (!c.initial_distribution.empty()) {
    double sum = 0.0;
    std::set<StanceValue> seen;
    for (const auto& e : c.initial_distribution) {
      if (e.fraction < 0.0 || !std::isfinite(e.fraction)) {
        v.push_back({"initial_distribution", "fraction for stance " + std::to_string(e.stance) +
                                                 " must be >= 0"});
      }
      if (e.stance < kMinStance || e.stance > kMaxStance) {
        v.push_back({"initial_distribution",
                     "stance " + std::to_string(e.stance) + " is not on the scale"});
      }
      if (!seen.insert(e.stance).second) {
        v.push_back({"initial_distribution", "stance " + std::to_string(e.stance) + " listed twice"});
      }
      sum += e.fraction;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      v.push_back({"initial_distribution", "fractions must sum to 1 (got " + std::to_string(sum) + ")"});
    }
  }

  // Negative alpha (anti-echo-chamber mixing) is accepted; it only has to be finite.
  if (!std::isfinite(c.sampler.alpha)) v.push_back({"sampler.alpha", "alpha must be finite"});
  if (c.sampler.kind == SamplerKind::kPowerlaw) {
    if (!(c.sampler.beta >= 0.0)) v.push_back({"sampler.beta", "beta must be >= 0"});
    if (!(c.sampler.epsilon > 0.0)) v.push_back({"sampler.epsilon", "epsilon must be > 0"});
  }
  if (!(c.surrogate.noise_sigma >= 0.0)) {
    v.push_back({"surrogate.noise_sigma", "noise_sigma must be >= 0"});
  }
  if (!(c.frequency_penalty >= -2.0 && c.frequency_penalty <= 2.0)) {
    v.push_back({"frequency_penalty", "frequency_penalty must be in [-2, 2]"});
  }
  if (c.engine_kind == EngineKind::kLlm) {
    if (c.llm.endpoint.empty()) v.push_back({"llm.endpoint", "endpoint must be set"});
    if (c.llm.model.empty()) v.push_back({"llm.model", "model must be set"});
    if (c.llm.parse_retries < 1) v.push_back({"llm.parse_retries", "parse_retries must be >= 1"});
    if (c.llm.transport_attempts < 1) {
      v.push_back({"llm.transport_attempts", "transport_attempts must be >= 1"});
    }
    if (c.llm.max_in_flight < 1) v.push_back({"llm.max_in_flight", "max_in_flight must be >= 1"});
  }
  if (c.reasons_enabled) {
    for (const auto& e : c.topic.scale.entries()) {
      auto it = c.reason_bank.reasons.find(e.value);
      if (it == c.reason_bank.reasons.end() || it->second.empty()) {
        v.push_back({"reason_bank", "no reasons for stance " + std::to_string(e.value)});
      }
    }
  }
  return v;
}

std::vector<DistributionEntry> effective_distribution(const RunConfig& config) {
  if (!config.initial_distribution.empty()) return config.initial_distribution;
  std::vector<DistributionEntry> uniform;
  for (StanceValue s = kMinStance; s <= kMaxStance; ++s) {
    uniform.push_back({s, 1.0 / kStanceCount});
  }
  return uniform;
}

std::map<StanceValue, int> allocate_counts(const std::vector<DistributionEntry>& distribution,
                                           int total) {
  std::vector<DistributionEntry> sorted = distribution;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.stance < b.stance; });

  std::map<StanceValue, int> counts;
  struct Remainder {
    StanceValue stance;
    double rem;
  };
  std::vector<Remainder> remainders;
  int assigned = 0;
  for (const auto& e : sorted) {
    const double exact = e.fraction * total;
    // Snap values within rounding noise of an integer so 0.2*100 is 20, not 19.
    const double snapped = std::abs(exact - std::round(exact)) < 1e-9 ? std::round(exact) : exact;
    const int base = static_cast<int>(std::floor(snapped));
    counts[e.stance] = base;
    assigned += base;
    remainders.push_back({e.stance, snapped - base});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.rem > b.rem; });
  for (std::size_t i = 0; assigned < total && !remainders.empty(); ++i) {
    counts[remainders[i % remainders.size()].stance] += 1;
    ++assigned;
  }
  return counts;
}

std::string generate_name(Rng& rng) {
  const auto first = kFirstNames[rng.below(kFirstNames.size())];
  const auto last = kLastNames[rng.below(kLastNames.size())];
  std::string name(first);
  name += ' ';
  name += last;
  return name;
}

Population build_population(const RunConfig& config, const ReasonBank& reasons, Rng& rng) {
  if (config.M <= 0) throw ConfigError("M must be > 0");
  const auto counts = allocate_counts(effective_distribution(config), config.M);

  std::vector<StanceValue> stances;
  stances.reserve(config.M);
  for (const auto& [stance, count] : counts) {
    if (count > 0 && !config.topic.scale.contains(stance)) {
      throw ConfigError("initial stance " + std::to_string(stance) + " is not on the topic scale");
    }
    if (count > 0 && config.reasons_enabled) {
      auto it = reasons.reasons.find(stance);
      if (it == reasons.reasons.end() || it->second.empty()) {
        throw ConfigError("reason bank has no entry for stance " + std::to_string(stance));
      }
    }
    stances.insert(stances.end(), count, stance);
  }
  rng.shuffle(stances.begin(), stances.end());

  Population pop;
  pop.agents.reserve(config.M);
  for (int i = 0; i < config.M; ++i) {
    Agent a;
    a.id = i;
    a.name = generate_name(rng);
    a.persona = config.persona;
    a.opinion.stance = stances[i];
    if (config.reasons_enabled) {
      const auto& pool = reasons.reasons.at(stances[i]);
      a.opinion.reason = pool[rng.below(pool.size())];
    }
    pop.agents.push_back(std::move(a));
  }
  return pop;
}

std::map<StanceValue, int> histogram(const std::vector<StanceValue>& stances) {
  std::map<StanceValue, int> h;
  for (StanceValue s = kMinStance; s <= kMaxStance; ++s) h[s] = 0;
  for (auto s : stances) h[s] += 1;
  return h;
}

std::string_view to_string(SamplerKind k) {
  return k == SamplerKind::kSigmoid ? "sigmoid" : "powerlaw";
}
std::string_view to_string(EngineKind k) { return k == EngineKind::kSurrogate ? "surrogate" : "llm"; }
std::string_view to_string(OpinionOrder k) {
  switch (k) {
    case OpinionOrder::kSampled: return "sampled";
    case OpinionOrder::kShuffled: return "shuffled";
    case OpinionOrder::kSorted: return "sorted";
  }
  return "sampled";
}
std::string_view to_string(UpdateMode k) {
  return k == UpdateMode::kSynchronous ? "synchronous" : "asynchronous";
}
std::string_view to_string(Rounding k) { return k == Rounding::kNearest ? "nearest" : "stochastic"; }

}  // namespace echosim
