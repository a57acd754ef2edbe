#include "echosim/update.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "echosim/assets.hpp"
#include "echosim/errors.hpp"
#include "echosim/log.hpp"
#include "echosim/rng.hpp"
#include "echosim/template.hpp"

namespace echosim {
namespace {

constexpr std::string_view kReplyMarker = "my stance after the discussion is";
constexpr std::string_view kReasonMarker = "my reason is";

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
bool is_word(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

std::string_view trim_ws(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool starts_with_any(std::string_view s, std::initializer_list<std::string_view> prefixes,
                     std::size_t& len) {
  for (auto p : prefixes) {
    if (s.substr(0, p.size()) == p) {
      len = p.size();
      return true;
    }
  }
  return false;
}

// Strips whitespace, ASCII and typographic quotes, and trailing periods or
// commas, repeatedly.
std::string_view strip_decoration(std::string_view s) {
  static const std::initializer_list<std::string_view> kQuotes = {
      "\"", "'", "`", "\xE2\x80\x9C", "\xE2\x80\x9D", "\xE2\x80\x98", "\xE2\x80\x99", "*"};
  bool changed = true;
  while (changed) {
    changed = false;
    const auto before = s.size();
    s = trim_ws(s);
    std::size_t len = 0;
    if (starts_with_any(s, kQuotes, len)) s.remove_prefix(len);
    for (auto q : kQuotes) {
      if (s.size() >= q.size() && s.substr(s.size() - q.size()) == q) {
        s.remove_suffix(q.size());
        break;
      }
    }
    while (!s.empty() && (s.back() == '.' || s.back() == ',')) s.remove_suffix(1);
    changed = s.size() != before;
  }
  return s;
}

std::string join_labels(const StanceScale& scale) {
  std::string out;
  for (const auto& e : scale.entries()) {
    if (!out.empty()) out += ',';
    out += '"' + e.label + '"';
  }
  return out;
}

std::optional<StanceValue> match_label(std::string_view segment, const StanceScale& scale, bool strict) {
  if (strict) return scale.value_of(trim_ws(segment));

  const auto cleaned = lower_ascii(strip_decoration(segment));
  for (const auto& e : scale.entries()) {
    if (lower_ascii(e.label) == cleaned) return e.value;
  }
  // Fall back to labels embedded in a longer phrase ("I choose Neutral").
  std::optional<StanceValue> best;
  std::size_t best_len = 0;
  for (const auto& e : scale.entries()) {
    const auto label = lower_ascii(e.label);
    for (auto pos = cleaned.find(label); pos != std::string::npos; pos = cleaned.find(label, pos + 1)) {
      const bool left_ok = pos == 0 || !is_word(cleaned[pos - 1]);
      const auto end = pos + label.size();
      const bool right_ok = end == cleaned.size() || !is_word(cleaned[end]);
      if (left_ok && right_ok && label.size() > best_len) {
        best = e.value;
        best_len = label.size();
      }
    }
  }
  return best;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {
  if (!text_.empty() && text_.back() == '\n') text_.pop_back();
}

PromptTemplate PromptTemplate::bundled(const std::string& language_tag) {
  return from_file((asset_dir() / "prompts" / (language_tag + ".txt")).string());
}

PromptTemplate PromptTemplate::from_file(const std::string& path) {
  return PromptTemplate(read_text_file(path));
}

std::string build_prompt(const UpdateContext& ctx, const PromptTemplate& tmpl) {
  TemplateContext tc;
  tc.values["question"] = ctx.topic.question;
  tc.values["self_stance"] = ctx.topic.scale.label_of(ctx.self_opinion.stance);
  tc.values["self_reason"] = ctx.self_opinion.reason;
  tc.values["stance_list"] = join_labels(ctx.topic.scale);
  tc.values["persona"] = ctx.persona.value_or("");
  tc.flags["reasons"] = ctx.reasons_enabled;
  auto& partners = tc.lists["partners"];
  for (const auto& p : ctx.partners) {
    TemplateContext item;
    item.values["name"] = p.name;
    item.values["stance"] = ctx.topic.scale.label_of(p.opinion.stance);
    item.values["reason"] = p.opinion.reason;
    partners.push_back(std::move(item));
  }
  return render_template(tmpl.text(), tc);
}

std::string build_prompt(const UpdateContext& ctx) {
  return build_prompt(ctx, PromptTemplate::bundled(ctx.topic.language_tag));
}

std::string format_reply(std::string_view stance_label, std::string_view reason, bool reasons_enabled) {
  std::string out = "My stance after the discussion is: ";
  out += stance_label;
  if (reasons_enabled) {
    out += ", and my reason is: ";
    out += reason;
  }
  return out;
}

Opinion parse_reply(std::string_view text, const StanceScale& scale, const ParseOptions& options) {
  const std::string lower = lower_ascii(text);
  const auto marker = options.strict ? std::string(text).find("My stance after the discussion is")
                                     : lower.find(kReplyMarker);
  if (marker == std::string::npos) throw ParseFailure(std::string(text));

  std::size_t pos = marker + kReplyMarker.size();
  while (pos < text.size() && is_space(text[pos])) ++pos;
  if (pos < text.size() && text[pos] == ':') ++pos;

  std::string_view stance_segment = text.substr(pos);
  std::string_view reason_segment;
  const auto reason_at = options.strict ? std::string(text).find("my reason is", pos)
                                        : lower.find(kReasonMarker, pos);
  if (reason_at != std::string::npos) {
    auto seg_end = reason_at;
    // Drop the ", and" joining the two clauses.
    auto head = lower.substr(pos, seg_end - pos);
    const auto and_at = head.rfind("and");
    if (and_at != std::string::npos && trim_ws(std::string_view(head).substr(and_at + 3)).empty()) {
      seg_end = pos + and_at;
    }
    stance_segment = text.substr(pos, seg_end - pos);
    auto rpos = reason_at + kReasonMarker.size();
    while (rpos < text.size() && is_space(text[rpos])) ++rpos;
    if (rpos < text.size() && text[rpos] == ':') ++rpos;
    reason_segment = text.substr(rpos);
  } else {
    // No reason clause: the stance runs to the end of the line.
    const auto nl = stance_segment.find('\n');
    if (nl != std::string_view::npos) stance_segment = stance_segment.substr(0, nl);
  }
  stance_segment = trim_ws(stance_segment);
  while (!stance_segment.empty() && stance_segment.back() == ',') stance_segment.remove_suffix(1);

  const auto value = match_label(stance_segment, scale, options.strict);
  if (!value) throw ParseFailure(std::string(text));

  Opinion out;
  out.stance = *value;
  if (options.reasons_enabled) out.reason = std::string(trim_ws(reason_segment));
  return out;
}

Opinion surrogate_update(const UpdateContext& ctx, const SurrogateParams& params, Rng& rng) {
  double around = 0.0;
  if (!ctx.partners.empty()) {
    for (const auto& p : ctx.partners) around += p.opinion.stance;
    around /= static_cast<double>(ctx.partners.size());
  }
  double raw = params.w_before * ctx.self_opinion.stance + params.w_around * around + params.bias;
  if (params.noise_sigma > 0.0) raw += rng.normal(0.0, params.noise_sigma);

  double rounded;
  if (params.rounding == Rounding::kNearest) {
    rounded = std::round(raw);  // half away from zero
  } else {
    const double lo = std::floor(raw);
    rounded = lo + (rng.bernoulli(raw - lo) ? 1.0 : 0.0);
  }
  rounded = std::clamp(rounded, static_cast<double>(kMinStance), static_cast<double>(kMaxStance));

  Opinion out;
  out.stance = static_cast<StanceValue>(rounded);
  out.reason = ctx.self_opinion.reason;
  return out;
}

const std::vector<SurrogatePreset>& surrogate_presets() {
  static const std::vector<SurrogatePreset> kPresets = {
      {"gpt35-en", 0.685, 0.409},  {"gpt4-en", 0.724, 0.526},   {"gpt35-ja", 0.0758, 0.901},
      {"gpt4-ja", 0.787, 0.410},   {"gpt4-n1", 0.787, 0.410},   {"gpt4-n10", 0.658, 0.495},
      {"stubborn", 0.999, 0.00864}, {"neutral", 0.724, 0.526},  {"swayed", 0.203, 0.895},
      {"identity", 1.0, 0.0},
  };
  return kPresets;
}

std::optional<SurrogatePreset> find_surrogate_preset(std::string_view name) {
  for (const auto& p : surrogate_presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

const std::vector<PersonaPreset>& persona_presets() {
  static const std::vector<PersonaPreset> kPresets = {
      {"stubborn", "You are a stubborn person and always think you are right.", "stubborn"},
      {"neutral", "", "neutral"},
      {"swayed",
       "You are easily swayed by your surroundings and immediately assume that other people's "
       "opinions are correct.",
       "swayed"},
  };
  return kPresets;
}

std::optional<PersonaPreset> find_persona_preset(std::string_view name) {
  for (const auto& p : persona_presets()) {
    if (p.name == name) return p;
  }
  return std::nullopt;
}

std::string_view to_string(UpdateStatus s) {
  return s == UpdateStatus::kOk ? "ok" : "parse_fallback";
}

UpdateOutcome SurrogateUpdater::update(const UpdateContext& ctx, Rng& rng) {
  return {surrogate_update(ctx, params_, rng), UpdateStatus::kOk, 1};
}

UpdateOutcome llm_update(const UpdateContext& ctx, ChatClient& client, const LlmUpdateParams& params,
                         const PromptTemplate& tmpl) {
  ChatRequest req;
  req.model = params.model;
  req.messages.push_back({"user", build_prompt(ctx, tmpl)});
  req.temperature = params.temperature;
  req.frequency_penalty = params.frequency_penalty;
  req.max_tokens = params.max_tokens;

  const ParseOptions parse_opts{ctx.reasons_enabled, params.strict_parse};
  const int budget = std::max(1, params.parse_retries);
  for (int attempt = 1; attempt <= budget; ++attempt) {
    const auto resp = client.complete(req);
    try {
      return {parse_reply(resp.content, ctx.topic.scale, parse_opts), UpdateStatus::kOk, attempt};
    } catch (const ParseFailure& e) {
      log::debug("unparseable reply (attempt " + std::to_string(attempt) + "): " + e.raw());
    }
  }
  log::warn("reply unparseable after " + std::to_string(budget) + " attempts; keeping prior opinion");
  return {ctx.self_opinion, UpdateStatus::kParseFallback, budget};
}

UpdateOutcome LlmUpdater::update(const UpdateContext& ctx, Rng&) {
  return llm_update(ctx, *client_, params_, template_);
}

std::size_t word_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (char c : text) {
    if (is_space(c)) {
      in_word = false;
    } else if (!in_word) {
      in_word = true;
      ++n;
    }
  }
  return n;
}

}  // namespace echosim
