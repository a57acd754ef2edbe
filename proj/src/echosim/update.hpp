#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "echosim/domain.hpp"
#include "echosim/llm_client.hpp"

namespace echosim {

class Rng;

struct PartnerOpinion {
  std::string name;
  Opinion opinion;
};

// Everything one opinion update may look at. `partners` is in presentation
// order and must be non-empty.
struct UpdateContext {
  Topic topic;
  Opinion self_opinion;
  std::vector<PartnerOpinion> partners;
  std::optional<std::string> persona;
  bool reasons_enabled = true;
};

// A prompt template with named placeholders, see assets/prompts/en.txt.
class PromptTemplate {
 public:
  explicit PromptTemplate(std::string text);

  // Loads <asset_dir>/prompts/<language_tag>.txt.
  static PromptTemplate bundled(const std::string& language_tag);
  static PromptTemplate from_file(const std::string& path);

  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

std::string build_prompt(const UpdateContext& ctx, const PromptTemplate& tmpl);
// Uses the bundled template for ctx.topic.language_tag.
std::string build_prompt(const UpdateContext& ctx);

// The reply shape the prompt asks for.
std::string format_reply(std::string_view stance_label, std::string_view reason, bool reasons_enabled);

struct ParseOptions {
  bool reasons_enabled = true;
  // Strict: exact-case label, whitespace trimming only.
  bool strict = false;
};

// Extracts the stance and reason from
//   "My stance after the discussion is: <stance>, and my reason is: <reason>"
// Labels match case-insensitively, ignoring surrounding quotes and a trailing
// period; when several labels occur in the stance segment the longest wins.
// Throws ParseFailure when no scale label can be identified.
Opinion parse_reply(std::string_view text, const StanceScale& scale, const ParseOptions& options);

// Linear surrogate of the fitted stance-transition regression:
//   raw = w_before * s_self + w_around * mean(s_partners) + bias + N(0, sigma)
// rounded (half away from zero, or stochastically between neighbours) and
// clamped to -2..2. The reason is carried over unchanged.
Opinion surrogate_update(const UpdateContext& ctx, const SurrogateParams& params, Rng& rng);

// Named weight presets. Each gpt*/stubborn/swayed entry is a fitted (w_before, w_around) pair.
struct SurrogatePreset {
  std::string_view name;
  double w_before;
  double w_around;
};
const std::vector<SurrogatePreset>& surrogate_presets();
std::optional<SurrogatePreset> find_surrogate_preset(std::string_view name);

// Persona presets bind the prompt sentence used with the LLM engine to the
// surrogate weights measured under that persona.
struct PersonaPreset {
  std::string_view name;
  std::string_view persona_text;  // empty for the neutral persona
  std::string_view surrogate_preset;
};
const std::vector<PersonaPreset>& persona_presets();
std::optional<PersonaPreset> find_persona_preset(std::string_view name);

enum class UpdateStatus { kOk, kParseFallback };
std::string_view to_string(UpdateStatus s);

struct UpdateOutcome {
  Opinion opinion;
  UpdateStatus status = UpdateStatus::kOk;
  int attempts = 1;
};

// Opinion-update engine. Implementations must be safe to call concurrently
// with distinct Rng instances.
class OpinionUpdater {
 public:
  virtual ~OpinionUpdater() = default;
  virtual UpdateOutcome update(const UpdateContext& ctx, Rng& rng) = 0;
};

class SurrogateUpdater : public OpinionUpdater {
 public:
  explicit SurrogateUpdater(SurrogateParams params) : params_(params) {}
  UpdateOutcome update(const UpdateContext& ctx, Rng& rng) override;

 private:
  SurrogateParams params_;
};

struct LlmUpdateParams {
  std::string model;
  double temperature = 1.0;
  double frequency_penalty = 0.0;
  std::optional<int> max_tokens;
  int parse_retries = 3;
  bool strict_parse = false;
};

// Builds the prompt, requests one completion and parses it. Unparseable
// replies are retried with the same prompt; after `parse_retries` failures
// the pre-discussion opinion is kept. Transport errors propagate.
UpdateOutcome llm_update(const UpdateContext& ctx, ChatClient& client, const LlmUpdateParams& params,
                         const PromptTemplate& tmpl);

class LlmUpdater : public OpinionUpdater {
 public:
  LlmUpdater(std::shared_ptr<ChatClient> client, LlmUpdateParams params, PromptTemplate tmpl)
      : client_(std::move(client)), params_(std::move(params)), template_(std::move(tmpl)) {}
  UpdateOutcome update(const UpdateContext& ctx, Rng& rng) override;

 private:
  std::shared_ptr<ChatClient> client_;
  LlmUpdateParams params_;
  PromptTemplate template_;
};

// Whitespace-token count, used for the reason word budget and length series.
std::size_t word_count(std::string_view text);

}  // namespace echosim
