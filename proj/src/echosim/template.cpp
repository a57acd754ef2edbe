#include "echosim/template.hpp"

#include <memory>
#include <optional>

#include "echosim/errors.hpp"

namespace echosim {
namespace {

struct Node {
  enum class Kind { kText, kValue, kSection, kInverted } kind = Kind::kText;
  std::string text;  // literal text or tag name
  std::vector<Node> children;
};

class Parser {
 public:
  explicit Parser(std::string_view src) : src_(src) {}

  std::vector<Node> parse() {
    auto nodes = parse_until("");
    if (pos_ < src_.size()) throw ConfigError("template: trailing input");
    return nodes;
  }

 private:
  std::vector<Node> parse_until(const std::string& closing) {
    std::vector<Node> out;
    while (pos_ < src_.size()) {
      const auto open = src_.find("{{", pos_);
      if (open == std::string_view::npos) {
        out.push_back({Node::Kind::kText, std::string(src_.substr(pos_)), {}});
        pos_ = src_.size();
        break;
      }
      if (open > pos_) out.push_back({Node::Kind::kText, std::string(src_.substr(pos_, open - pos_)), {}});
      const auto close = src_.find("}}", open + 2);
      if (close == std::string_view::npos) throw ConfigError("template: unterminated tag");
      std::string tag(src_.substr(open + 2, close - open - 2));
      pos_ = close + 2;
      if (tag.empty()) throw ConfigError("template: empty tag");

      const char sigil = tag.front();
      if (sigil == '!') {
        if (pos_ < src_.size() && src_[pos_] == '\n') ++pos_;
        continue;
      }
      if (sigil == '/') {
        const std::string name = trim(tag.substr(1));
        if (name != closing) throw ConfigError("template: unexpected close tag '" + name + "'");
        return out;
      }
      if (sigil == '#' || sigil == '^') {
        const std::string name = trim(tag.substr(1));
        Node n{sigil == '#' ? Node::Kind::kSection : Node::Kind::kInverted, name, {}};
        n.children = parse_until(name);
        out.push_back(std::move(n));
        continue;
      }
      out.push_back({Node::Kind::kValue, trim(tag), {}});
    }
    if (!closing.empty()) throw ConfigError("template: section '" + closing + "' not closed");
    return out;
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

using Scope = std::vector<const TemplateContext*>;

const std::string* find_value(const Scope& scope, const std::string& name) {
  for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
    if (auto f = (*it)->values.find(name); f != (*it)->values.end()) return &f->second;
  }
  return nullptr;
}

// nullopt when the name is unknown in every scope.
std::optional<bool> find_flag(const Scope& scope, const std::string& name) {
  for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
    if (auto f = (*it)->flags.find(name); f != (*it)->flags.end()) return f->second;
    if (auto l = (*it)->lists.find(name); l != (*it)->lists.end()) return !l->second.empty();
    if (auto v = (*it)->values.find(name); v != (*it)->values.end()) return !v->second.empty();
  }
  return std::nullopt;
}

const std::vector<TemplateContext>* find_list(const Scope& scope, const std::string& name) {
  for (auto it = scope.rbegin(); it != scope.rend(); ++it) {
    if (auto l = (*it)->lists.find(name); l != (*it)->lists.end()) return &l->second;
    if ((*it)->flags.count(name) || (*it)->values.count(name)) return nullptr;
  }
  return nullptr;
}

void render(const std::vector<Node>& nodes, Scope& scope, std::string& out) {
  for (const auto& n : nodes) {
    switch (n.kind) {
      case Node::Kind::kText:
        out += n.text;
        break;
      case Node::Kind::kValue: {
        const auto* v = find_value(scope, n.text);
        if (!v) throw ConfigError("template: unknown placeholder '" + n.text + "'");
        out += *v;
        break;
      }
      case Node::Kind::kSection: {
        if (const auto* list = find_list(scope, n.text)) {
          for (const auto& item : *list) {
            scope.push_back(&item);
            render(n.children, scope, out);
            scope.pop_back();
          }
        } else if (find_flag(scope, n.text).value_or(false)) {
          render(n.children, scope, out);
        }
        break;
      }
      case Node::Kind::kInverted:
        if (!find_flag(scope, n.text).value_or(false)) render(n.children, scope, out);
        break;
    }
  }
}

}  // namespace

std::string render_template(std::string_view tmpl, const TemplateContext& ctx) {
  const auto nodes = Parser(tmpl).parse();
  Scope scope{&ctx};
  std::string out;
  render(nodes, scope, out);
  return out;
}

}  // namespace echosim
