#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace echosim {

// Logic-less template values. Lookups walk from the innermost section
// outward, so list items can read top-level flags.
struct TemplateContext {
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;
  std::map<std::string, std::vector<TemplateContext>> lists;
};

// Renders a mustache-style subset:
//   {{name}}                  value substitution (unknown names are an error)
//   {{#name}}...{{/name}}     section: true flag, non-empty value, or one
//                             pass per list item
//   {{^name}}...{{/name}}     inverted section
//   {{! comment }}            dropped, along with its trailing newline
// No escaping is applied. Throws ConfigError on malformed templates.
std::string render_template(std::string_view tmpl, const TemplateContext& ctx);

}  // namespace echosim
