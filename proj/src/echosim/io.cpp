#include "echosim/io.hpp"

#include <set>

#include "echosim/assets.hpp"
#include "echosim/errors.hpp"
#include "echosim/update.hpp"

namespace echosim {
namespace fs = std::filesystem;
namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    if (!key.empty() && key.front() == '_') continue;  // comments
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

// Relative path resolution: base_dir, then the working directory.
std::optional<fs::path> find_file(const std::string& ref, const fs::path& base_dir) {
  const fs::path p(ref);
  if (p.is_absolute()) return fs::exists(p) ? std::optional(p) : std::nullopt;
  if (!base_dir.empty() && fs::exists(base_dir / p)) return base_dir / p;
  if (fs::exists(p)) return p;
  return std::nullopt;
}

SamplerKind parse_sampler_kind(const std::string& s) {
  if (s == "sigmoid") return SamplerKind::kSigmoid;
  if (s == "powerlaw") return SamplerKind::kPowerlaw;
  throw ConfigError("sampler.kind must be sigmoid or powerlaw, got '" + s + "'");
}

EngineKind parse_engine_kind(const std::string& s) {
  if (s == "surrogate") return EngineKind::kSurrogate;
  if (s == "llm") return EngineKind::kLlm;
  throw ConfigError("engine must be surrogate or llm, got '" + s + "'");
}

OpinionOrder parse_order(const std::string& s) {
  if (s == "sampled") return OpinionOrder::kSampled;
  if (s == "shuffled") return OpinionOrder::kShuffled;
  if (s == "sorted") return OpinionOrder::kSorted;
  throw ConfigError("opinion_order must be sampled, shuffled or sorted, got '" + s + "'");
}

UpdateMode parse_update_mode(const std::string& s) {
  if (s == "synchronous") return UpdateMode::kSynchronous;
  if (s == "asynchronous") return UpdateMode::kAsynchronous;
  throw ConfigError("update_mode must be synchronous or asynchronous, got '" + s + "'");
}

Rounding parse_rounding(const std::string& s) {
  if (s == "nearest") return Rounding::kNearest;
  if (s == "stochastic") return Rounding::kStochastic;
  throw ConfigError("rounding must be nearest or stochastic, got '" + s + "'");
}

std::vector<DistributionEntry> parse_distribution(const json& j) {
  std::vector<DistributionEntry> out;
  if (j.is_null() || (j.is_string() && j.get<std::string>() == "uniform")) return out;
  if (j.is_array()) {
    for (const auto& e : j) {
      if (!e.is_object() || !e.contains("stance") || !e.contains("fraction")) {
        throw ConfigError("initial_distribution entries need 'stance' and 'fraction'");
      }
      out.push_back({e.at("stance").get<int>(), e.at("fraction").get<double>()});
    }
    return out;
  }
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) {
      try {
        out.push_back({std::stoi(k), v.get<double>()});
      } catch (const std::exception&) {
        throw ConfigError("initial_distribution key '" + k + "' is not a stance value");
      }
    }
    return out;
  }
  throw ConfigError("initial_distribution must be \"uniform\", a list, or an object");
}

void apply_surrogate_preset(RunConfig& c, std::string_view name) {
  const auto p = find_surrogate_preset(name);
  if (!p) throw ConfigError("unknown surrogate preset '" + std::string(name) + "'");
  c.preset = std::string(p->name);
  c.surrogate.w_before = p->w_before;
  c.surrogate.w_around = p->w_around;
}

}  // namespace

Topic topic_from_json(const json& j) {
  reject_unknown(j, {"id", "question", "scale", "language_tag"}, "topic");
  Topic t;
  t.id = get_or<std::string>(j, "id", "");
  t.question = get_or<std::string>(j, "question", "");
  t.language_tag = get_or<std::string>(j, "language_tag", "en");
  if (t.id.empty()) throw ConfigError("topic.id must be non-empty");
  if (t.question.empty()) throw ConfigError("topic.question must be non-empty");
  std::vector<StanceEntry> entries;
  for (const auto& e : j.at("scale")) {
    entries.push_back({e.at("label").get<std::string>(), e.at("value").get<int>()});
  }
  t.scale = StanceScale::from_entries(std::move(entries));
  return t;
}

ordered_json topic_to_json(const Topic& t) {
  ordered_json j;
  j["id"] = t.id;
  j["question"] = t.question;
  j["language_tag"] = t.language_tag;
  j["scale"] = ordered_json::array();
  for (const auto& e : t.scale.entries()) j["scale"].push_back({{"label", e.label}, {"value", e.value}});
  return j;
}

ReasonBank reason_bank_from_json(const json& j) {
  reject_unknown(j, {"topic_id", "reasons"}, "reason bank");
  ReasonBank b;
  b.topic_id = get_or<std::string>(j, "topic_id", "");
  for (const auto& [k, v] : j.at("reasons").items()) {
    int value;
    try {
      value = std::stoi(k);
    } catch (const std::exception&) {
      throw ConfigError("reason bank key '" + k + "' is not a stance value");
    }
    b.reasons[value] = v.get<std::vector<std::string>>();
  }
  return b;
}

ordered_json reason_bank_to_json(const ReasonBank& b) {
  ordered_json j;
  j["topic_id"] = b.topic_id;
  j["reasons"] = ordered_json::object();
  for (auto it = b.reasons.rbegin(); it != b.reasons.rend(); ++it) {
    j["reasons"][std::to_string(it->first)] = it->second;
  }
  return j;
}

json read_json_file(const fs::path& path) {
  const auto text = read_text_file(path);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Topic load_topic(const json& ref, const fs::path& base_dir) {
  if (ref.is_object()) return topic_from_json(ref);
  if (!ref.is_string()) throw ConfigError("topic must be an object, a path, or a bundled topic id");
  const auto s = ref.get<std::string>();
  if (auto p = find_file(s, base_dir)) return topic_from_json(read_json_file(*p));
  const auto bundled = asset_dir() / "topics" / (s + ".json");
  if (fs::exists(bundled)) return topic_from_json(read_json_file(bundled));
  throw ConfigError("topic '" + s + "' is neither a file nor a bundled topic");
}

ReasonBank load_reason_bank(const json& ref, const fs::path& base_dir) {
  if (ref.is_object()) return reason_bank_from_json(ref);
  if (!ref.is_string()) throw ConfigError("reason_bank must be an object, a path, or a topic id");
  const auto s = ref.get<std::string>();
  if (auto p = find_file(s, base_dir)) return reason_bank_from_json(read_json_file(*p));
  const auto bundled = asset_dir() / "banks" / (s + ".json");
  if (fs::exists(bundled)) return reason_bank_from_json(read_json_file(bundled));
  throw ConfigError("reason bank '" + s + "' is neither a file nor a bundled bank");
}

RunConfig config_from_json(const json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(doc,
                 {"topic", "reason_bank", "prompt_template", "M", "N", "K", "trials", "seed", "sampler",
                  "engine", "preset", "persona_preset", "surrogate", "llm", "reasons_enabled", "persona",
                  "initial_distribution", "opinion_order", "frequency_penalty", "update_mode"},
                 "config");
  RunConfig c;
  const json topic_ref = doc.value("topic", json("t_ai"));
  c.topic_ref = topic_ref.is_string() ? topic_ref.get<std::string>() : "inline";
  c.topic = load_topic(topic_ref, base_dir);

  c.M = get_or(doc, "M", c.M);
  c.N = get_or(doc, "N", c.N);
  c.K = get_or(doc, "K", c.K);
  c.trials = get_or(doc, "trials", c.trials);
  c.seed = get_or<std::uint64_t>(doc, "seed", c.seed);
  c.reasons_enabled = get_or(doc, "reasons_enabled", c.reasons_enabled);

  const json bank_ref = doc.value("reason_bank", json(c.topic.id));
  c.reason_bank_ref = bank_ref.is_string() ? bank_ref.get<std::string>() : "inline";
  if (c.reasons_enabled || doc.contains("reason_bank")) {
    c.reason_bank = load_reason_bank(bank_ref, base_dir);
  }
  if (auto pt = get_or<std::string>(doc, "prompt_template", ""); !pt.empty()) {
    auto found = find_file(pt, base_dir);
    if (!found) throw ConfigError("prompt template '" + pt + "' not found");
    c.prompt_template = found->string();
  }

  if (auto it = doc.find("sampler"); it != doc.end()) {
    reject_unknown(*it, {"kind", "alpha", "beta", "epsilon"}, "sampler");
    c.sampler.kind = parse_sampler_kind(get_or<std::string>(*it, "kind", "sigmoid"));
    c.sampler.alpha = get_or(*it, "alpha", c.sampler.alpha);
    c.sampler.beta = get_or(*it, "beta", c.sampler.beta);
    c.sampler.epsilon = get_or(*it, "epsilon", c.sampler.epsilon);
  }

  c.engine_kind = parse_engine_kind(get_or<std::string>(doc, "engine", "surrogate"));
  apply_surrogate_preset(c, get_or<std::string>(doc, "preset", c.preset));

  if (auto pp = get_or<std::string>(doc, "persona_preset", ""); !pp.empty()) {
    const auto persona = find_persona_preset(pp);
    if (!persona) throw ConfigError("unknown persona preset '" + pp + "'");
    apply_surrogate_preset(c, persona->surrogate_preset);
    if (!persona->persona_text.empty()) c.persona = std::string(persona->persona_text);
  }
  if (auto it = doc.find("persona"); it != doc.end()) {
    if (it->is_null()) {
      c.persona.reset();
    } else {
      auto text = it->get<std::string>();
      c.persona = text.empty() ? std::nullopt : std::optional(text);
    }
  }

  if (auto it = doc.find("surrogate"); it != doc.end()) {
    reject_unknown(*it, {"w_before", "w_around", "bias", "noise_sigma", "rounding"}, "surrogate");
    c.surrogate.w_before = get_or(*it, "w_before", c.surrogate.w_before);
    c.surrogate.w_around = get_or(*it, "w_around", c.surrogate.w_around);
    c.surrogate.bias = get_or(*it, "bias", c.surrogate.bias);
    c.surrogate.noise_sigma = get_or(*it, "noise_sigma", c.surrogate.noise_sigma);
    c.surrogate.rounding = parse_rounding(get_or<std::string>(*it, "rounding", "nearest"));
  }

  if (auto it = doc.find("llm"); it != doc.end()) {
    reject_unknown(*it,
                   {"model", "endpoint", "api_key_env", "temperature", "max_tokens", "parse_retries",
                    "transport_attempts", "max_in_flight", "timeout_s", "strict_parse", "debug"},
                   "llm");
    auto& l = c.llm;
    l.model = get_or(*it, "model", l.model);
    l.endpoint = get_or(*it, "endpoint", l.endpoint);
    l.api_key_env = get_or(*it, "api_key_env", l.api_key_env);
    l.temperature = get_or(*it, "temperature", l.temperature);
    if (it->contains("max_tokens") && !it->at("max_tokens").is_null()) {
      l.max_tokens = it->at("max_tokens").get<int>();
    }
    l.parse_retries = get_or(*it, "parse_retries", l.parse_retries);
    l.transport_attempts = get_or(*it, "transport_attempts", l.transport_attempts);
    l.max_in_flight = get_or(*it, "max_in_flight", l.max_in_flight);
    l.timeout_s = get_or(*it, "timeout_s", l.timeout_s);
    l.strict_parse = get_or(*it, "strict_parse", l.strict_parse);
    l.debug = get_or(*it, "debug", l.debug);
  }

  if (auto it = doc.find("initial_distribution"); it != doc.end()) {
    c.initial_distribution = parse_distribution(*it);
  }
  c.opinion_order = parse_order(get_or<std::string>(doc, "opinion_order", "sampled"));
  c.frequency_penalty = get_or(doc, "frequency_penalty", c.frequency_penalty);
  c.update_mode = parse_update_mode(get_or<std::string>(doc, "update_mode", "synchronous"));
  return c;
}

ordered_json config_to_json(const RunConfig& c) {
  ordered_json j;
  j["topic"] = topic_to_json(c.topic);
  j["reason_bank"] = reason_bank_to_json(c.reason_bank);
  if (!c.prompt_template.empty()) j["prompt_template"] = c.prompt_template;
  j["M"] = c.M;
  j["N"] = c.N;
  j["K"] = c.K;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["sampler"] = {{"kind", to_string(c.sampler.kind)},
                  {"alpha", c.sampler.alpha},
                  {"beta", c.sampler.beta},
                  {"epsilon", c.sampler.epsilon}};
  j["engine"] = to_string(c.engine_kind);
  j["preset"] = c.preset;
  j["surrogate"] = {{"w_before", c.surrogate.w_before},
                    {"w_around", c.surrogate.w_around},
                    {"bias", c.surrogate.bias},
                    {"noise_sigma", c.surrogate.noise_sigma},
                    {"rounding", to_string(c.surrogate.rounding)}};
  ordered_json llm = {{"model", c.llm.model},
                      {"endpoint", c.llm.endpoint},
                      {"api_key_env", c.llm.api_key_env},
                      {"temperature", c.llm.temperature},
                      {"parse_retries", c.llm.parse_retries},
                      {"transport_attempts", c.llm.transport_attempts},
                      {"max_in_flight", c.llm.max_in_flight},
                      {"timeout_s", c.llm.timeout_s},
                      {"strict_parse", c.llm.strict_parse},
                      {"debug", c.llm.debug}};
  llm["max_tokens"] = c.llm.max_tokens ? ordered_json(*c.llm.max_tokens) : ordered_json(nullptr);
  j["llm"] = llm;
  j["reasons_enabled"] = c.reasons_enabled;
  j["persona"] = c.persona ? ordered_json(*c.persona) : ordered_json(nullptr);
  ordered_json dist = ordered_json::array();
  for (const auto& e : effective_distribution(c)) dist.push_back({{"stance", e.stance}, {"fraction", e.fraction}});
  j["initial_distribution"] = dist;
  j["opinion_order"] = to_string(c.opinion_order);
  j["frequency_penalty"] = c.frequency_penalty;
  j["update_mode"] = to_string(c.update_mode);
  return j;
}

void apply_override(json& doc, const std::string& key, const std::string& value) {
  json v;
  try {
    v = json::parse(value);
  } catch (const json::exception&) {
    v = value;
  }
  apply_override(doc, key, v);
}

void apply_override(json& doc, const std::string& key, const json& v) {
  if (const auto dot = key.find('.'); dot != std::string::npos) {
    static const std::set<std::string> kSections = {"sampler", "surrogate", "llm"};
    const auto section = key.substr(0, dot);
    if (!kSections.count(section)) throw ConfigError("unknown override key '" + key + "'");
    doc[section][key.substr(dot + 1)] = v;
    return;
  }
  static const std::set<std::string> kTop = {
      "M",       "N",        "K",              "trials",       "seed",          "reasons_enabled",
      "persona", "engine",   "opinion_order",  "frequency_penalty", "update_mode", "initial_distribution",
      "topic",   "reason_bank", "prompt_template"};
  static const std::map<std::string, std::string> kSampler = {
      {"alpha", "alpha"}, {"beta", "beta"}, {"epsilon", "epsilon"}, {"sampler", "kind"}};
  static const std::map<std::string, std::string> kSurrogate = {
      {"w_before", "w_before"}, {"w_around", "w_around"}, {"bias", "bias"},
      {"noise_sigma", "noise_sigma"}, {"sigma", "noise_sigma"}, {"rounding", "rounding"}};
  static const std::set<std::string> kLlm = {"model",         "endpoint",           "api_key_env",
                                             "temperature",   "max_tokens",         "parse_retries",
                                             "max_in_flight", "transport_attempts", "timeout_s",
                                             "strict_parse",  "debug"};

  if (key == "preset" || key == "persona_preset") {
    // A preset replaces any explicit weights already in the document.
    if (auto it = doc.find("surrogate"); it != doc.end() && it->is_object()) {
      it->erase("w_before");
      it->erase("w_around");
    }
    if (key == "persona_preset") doc.erase("persona");
    doc[key] = v;
    return;
  }
  if (kTop.count(key)) {
    doc[key] = v;
  } else if (auto s = kSampler.find(key); s != kSampler.end()) {
    doc["sampler"][s->second] = v;
  } else if (auto g = kSurrogate.find(key); g != kSurrogate.end()) {
    doc["surrogate"][g->second] = v;
  } else if (kLlm.count(key)) {
    doc["llm"][key] = v;
  } else {
    throw ConfigError("unknown override key '" + key + "'");
  }
}

ordered_json record_to_json(const TurnRecord& r) {
  ordered_json j;
  j["trial"] = r.trial;
  j["turn"] = r.turn;
  j["agent_id"] = r.agent_id;
  j["stance_before"] = r.stance_before;
  j["partner_ids"] = r.partner_ids;
  j["partner_stances"] = r.partner_stances;
  j["stance_after"] = r.stance_after;
  j["reason_before"] = r.reason_before;
  j["reason_after"] = r.reason_after;
  j["update_status"] = to_string(r.update_status);
  return j;
}

TurnRecord record_from_json(const json& j) {
  TurnRecord r;
  r.trial = j.at("trial").get<int>();
  r.turn = j.at("turn").get<int>();
  r.agent_id = j.at("agent_id").get<int>();
  r.stance_before = j.at("stance_before").get<int>();
  r.partner_ids = j.at("partner_ids").get<std::vector<int>>();
  r.partner_stances = j.at("partner_stances").get<std::vector<int>>();
  r.stance_after = j.at("stance_after").get<int>();
  r.reason_before = j.value("reason_before", "");
  r.reason_after = j.value("reason_after", "");
  const auto status = j.value("update_status", "ok");
  if (status == "ok") {
    r.update_status = UpdateStatus::kOk;
  } else if (status == "parse_fallback") {
    r.update_status = UpdateStatus::kParseFallback;
  } else {
    throw ConfigError("unknown update_status '" + status + "'");
  }
  if (r.partner_ids.size() != r.partner_stances.size()) {
    throw ConfigError("partner_ids and partner_stances differ in length");
  }
  auto in_range = [](int v) { return v >= kMinStance && v <= kMaxStance; };
  if (!in_range(r.stance_before) || !in_range(r.stance_after)) throw ConfigError("stance out of range");
  for (auto s : r.partner_stances) {
    if (!in_range(s)) throw ConfigError("partner stance out of range");
  }
  return r;
}

std::string record_to_line(const TurnRecord& r) { return record_to_json(r).dump(); }

}  // namespace echosim
