#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "echosim/domain.hpp"
#include "echosim/engine.hpp"

namespace echosim {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Topic topic_from_json(const json& j);
ordered_json topic_to_json(const Topic& topic);

ReasonBank reason_bank_from_json(const json& j);
ordered_json reason_bank_to_json(const ReasonBank& bank);

// Resolves a topic reference: an inline object, a file path (relative to
// base_dir first), or the id of a bundled topic.
Topic load_topic(const json& ref, const std::filesystem::path& base_dir);
ReasonBank load_reason_bank(const json& ref, const std::filesystem::path& base_dir);

// Builds a RunConfig from the documented JSON schema. Missing keys take the
// defaults; unknown keys are rejected. Presets are applied before explicit
// surrogate weights, so explicit weights win.
RunConfig config_from_json(const json& doc, const std::filesystem::path& base_dir);

// Full snapshot with the topic and reason bank inlined; feeding it back to
// config_from_json reproduces the run.
ordered_json config_to_json(const RunConfig& config);

// Applies a CLI-style override such as ("alpha", "1.0") or ("preset",
// "stubborn") to a config document. The value is parsed as JSON when it is
// valid JSON, otherwise taken as a string. Throws ConfigError on unknown keys.
void apply_override(json& doc, const std::string& key, const std::string& value);
void apply_override(json& doc, const std::string& key, const json& value);
inline void apply_override(json& doc, const std::string& key, const char* value) {
  apply_override(doc, key, std::string(value));
}

ordered_json record_to_json(const TurnRecord& r);
TurnRecord record_from_json(const json& j);

// One compact JSON object per line, no trailing spaces.
std::string record_to_line(const TurnRecord& r);

json read_json_file(const std::filesystem::path& path);

}  // namespace echosim
