#include <algorithm>
#include <set>

#include "orc/error.hpp"
#include "orc/uci.hpp"
#include "orc/yang.hpp"

namespace orc::yang {

namespace {

constexpr int kMaxDepth = 64;

struct Statement {
  std::string keyword;
  std::optional<std::string> arg;
  std::vector<Statement> subs;
  std::size_t line = 0;
};

enum class TokKind { end, lbrace, rbrace, semi, string };

struct Token {
  TokKind kind = TokKind::end;
  std::string text;
  bool quoted = false;
  std::size_t line = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view s) : s_(s) {}

  Token next() {
    skip();
    Token t;
    t.line = line_;
    if (pos_ >= s_.size()) return t;
    const char c = s_[pos_];
    if (c == '{' || c == '}' || c == ';') {
      ++pos_;
      t.kind = c == '{' ? TokKind::lbrace : c == '}' ? TokKind::rbrace : TokKind::semi;
      return t;
    }
    t.kind = TokKind::string;
    if (c == '"' || c == '\'') {
      t.quoted = true;
      t.text = quoted();
      // "a" + "b" concatenation
      for (;;) {
        const auto save_pos = pos_;
        const auto save_line = line_;
        skip();
        if (pos_ < s_.size() && s_[pos_] == '+') {
          ++pos_;
          skip();
          if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\''))
            throw SyntaxError(line_, "expected quoted string after '+'");
          t.text += quoted();
        } else {
          pos_ = save_pos;
          line_ = save_line;
          break;
        }
      }
      return t;
    }
    while (pos_ < s_.size()) {
      const char d = s_[pos_];
      if (d == ' ' || d == '\t' || d == '\n' || d == '\r' || d == ';' || d == '{' || d == '}') break;
      if (d == '/' && pos_ + 1 < s_.size() && (s_[pos_ + 1] == '/' || s_[pos_ + 1] == '*')) break;
      if (d == '"' || d == '\'') throw SyntaxError(line_, "quote inside unquoted string");
      t.text.push_back(d);
      ++pos_;
    }
    return t;
  }

 private:
  void skip() {
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (c == ' ' || c == '\t' || c == '\r') {
        ++pos_;
      } else if (c == '/' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '/') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (c == '/' && pos_ + 1 < s_.size() && s_[pos_ + 1] == '*') {
        const auto start_line = line_;
        pos_ += 2;
        for (;;) {
          if (pos_ + 1 >= s_.size()) throw SyntaxError(start_line, "unterminated comment");
          if (s_[pos_] == '*' && s_[pos_ + 1] == '/') {
            pos_ += 2;
            break;
          }
          if (s_[pos_] == '\n') ++line_;
          ++pos_;
        }
      } else {
        break;
      }
    }
  }

  std::string quoted() {
    const char q = s_[pos_++];
    const auto start_line = line_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != q) {
      char c = s_[pos_++];
      if (c == '\n') ++line_;
      if (q == '"' && c == '\\') {
        if (pos_ >= s_.size()) break;
        const char e = s_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 't': c = '\t'; break;
          case '"': c = '"'; break;
          case '\\': c = '\\'; break;
          default: throw SyntaxError(line_, std::string("invalid escape '\\") + e + "'");
        }
      }
      out.push_back(c);
    }
    if (pos_ >= s_.size()) throw SyntaxError(start_line, "unterminated string");
    ++pos_;
    return out;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

bool is_yang_identifier(std::string_view s) {
  if (s.empty()) return false;
  const auto first = s.front();
  if (!((first >= 'a' && first <= 'z') || (first >= 'A' && first <= 'Z') || first == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' || c == '-' ||
           c == '.';
  });
}

bool is_keyword(std::string_view s) {
  const auto colon = s.find(':');
  if (colon == std::string_view::npos) return is_yang_identifier(s);
  return is_yang_identifier(s.substr(0, colon)) && is_yang_identifier(s.substr(colon + 1));
}

class StatementParser {
 public:
  explicit StatementParser(std::string_view text) : lex_(text) {}

  std::vector<Statement> parse_all() {
    std::vector<Statement> out;
    for (;;) {
      auto t = lex_.next();
      if (t.kind == TokKind::end) return out;
      out.push_back(parse_statement(std::move(t), 0));
    }
  }

 private:
  Statement parse_statement(Token kw, int depth) {
    if (depth > kMaxDepth) throw SyntaxError(kw.line, "statements nested too deeply");
    if (kw.kind != TokKind::string || kw.quoted || !is_keyword(kw.text))
      throw SyntaxError(kw.line, "expected a statement keyword");
    Statement st;
    st.keyword = std::move(kw.text);
    st.line = kw.line;
    auto t = lex_.next();
    if (t.kind == TokKind::string) {
      st.arg = std::move(t.text);
      t = lex_.next();
    }
    if (t.kind == TokKind::semi) return st;
    if (t.kind != TokKind::lbrace) throw SyntaxError(t.line, "expected ';' or '{' after '" + st.keyword + "'");
    for (;;) {
      auto s = lex_.next();
      if (s.kind == TokKind::rbrace) return st;
      if (s.kind == TokKind::end) throw SyntaxError(st.line, "missing '}' for '" + st.keyword + "'");
      st.subs.push_back(parse_statement(std::move(s), depth + 1));
    }
  }

  Lexer lex_;
};

const std::string& require_arg(const Statement& st) {
  if (!st.arg) throw SyntaxError(st.line, "'" + st.keyword + "' requires an argument");
  return *st.arg;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '\r')) ++i;
    const auto start = i;
    while (i < s.size() && !(s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '\r')) ++i;
    if (i > start) out.emplace_back(s.substr(start, i - start));
  }
  return out;
}

bool in(std::string_view kw, std::initializer_list<std::string_view> set) {
  return std::find(set.begin(), set.end(), kw) != set.end();
}

// Statements that carry no meaning for the mapping.
bool is_informational(std::string_view kw) {
  return in(kw, {"description", "reference", "status", "units", "config", "presence", "organization", "contact",
                 "yang-version", "revision", "revision-date", "error-message", "error-app-tag", "value"});
}

class ModuleBuilder {
 public:
  Module build(const Statement& st) {
    if (st.keyword != "module") {
      if (is_keyword(st.keyword) && st.keyword.find(':') == std::string::npos)
        throw UnsupportedStatement(st.keyword, st.line);
      throw SyntaxError(st.line, "expected 'module'");
    }
    module_.name = require_arg(st);
    if (!is_yang_identifier(module_.name)) throw SyntaxError(st.line, "invalid module name '" + module_.name + "'");
    module_.root.kind = NodeKind::module;
    module_.root.name = module_.name;
    module_.root.line = st.line;

    for (const auto& s : st.subs) {
      if (s.keyword == "import") {
        Import imp{require_arg(s), {}};
        for (const auto& i : s.subs) {
          if (i.keyword == "prefix") {
            imp.prefix = require_arg(i);
          } else if (!is_informational(i.keyword)) {
            unsupported(i);
          }
        }
        if (imp.prefix.empty()) throw SyntaxError(s.line, "import '" + imp.module + "' has no prefix");
        if (imp.module == kExtensionModule) extension_prefix_ = imp.prefix;
        module_.imports.push_back(std::move(imp));
      } else if (s.keyword == "prefix") {
        module_.prefix = require_arg(s);
      }
    }

    for (const auto& s : st.subs) {
      if (s.keyword == "import" || s.keyword == "prefix") continue;
      if (s.keyword == "namespace") {
        module_.namespace_uri = require_arg(s);
      } else if (s.keyword == "typedef") {
        typedef_stmt(s);
      } else if (s.keyword == "extension") {
        continue;  // declarations of extensions (the extension module itself)
      } else if (data_or_annotation(s, module_.root, "")) {
        continue;
      } else if (!is_informational(s.keyword)) {
        unsupported(s);
      }
    }
    return std::move(module_);
  }

 private:
  [[noreturn]] void unsupported(const Statement& s) {
    if (s.keyword.find(':') != std::string::npos) throw SyntaxError(s.line, "unknown prefix in '" + s.keyword + "'");
    throw UnsupportedStatement(s.keyword, s.line);
  }

  // Handles data-definition and UCI annotation statements; false otherwise.
  bool data_or_annotation(const Statement& s, Node& parent, const std::string& path) {
    if (const auto colon = s.keyword.find(':'); colon != std::string::npos) {
      const auto prefix = s.keyword.substr(0, colon);
      const auto name = s.keyword.substr(colon + 1);
      if (prefix == extension_prefix_) {
        annotation(s, name, parent);
        return true;
      }
      const bool known = std::any_of(module_.imports.begin(), module_.imports.end(),
                                     [&](const Import& i) { return i.prefix == prefix; });
      if (!known) throw SyntaxError(s.line, "unknown prefix '" + prefix + "'");
      return true;  // foreign extension, ignored
    }
    if (parent.kind == NodeKind::leaf || parent.kind == NodeKind::leaf_list) return false;
    if (s.keyword == "container" || s.keyword == "list" || s.keyword == "leaf" || s.keyword == "leaf-list") {
      data_node(s, parent, path);
      return true;
    }
    return false;
  }

  void annotation(const Statement& s, const std::string& name, Node& node) {
    const auto& value = require_arg(s);
    std::optional<std::string>* slot = nullptr;
    if (name == "package") {
      slot = &node.uci.package;
    } else if (name == "section") {
      slot = &node.uci.section;
    } else if (name == "section-name") {
      slot = &node.uci.section_name;
    } else if (name == "option") {
      slot = &node.uci.option;
    } else if (name == "leaf-as-name") {
      slot = &node.uci.leaf_as_name;
    } else {
      throw UnsupportedStatement(s.keyword, s.line);
    }
    if (!s.subs.empty()) throw SyntaxError(s.line, "'" + s.keyword + "' takes no substatements");
    if (*slot) {
      node.repeated_annotations.push_back(name);
    } else {
      *slot = value;
    }
  }

  void data_node(const Statement& s, Node& parent, const std::string& parent_path) {
    Node node;
    node.name = require_arg(s);
    node.line = s.line;
    if (!is_yang_identifier(node.name)) throw SyntaxError(s.line, "invalid identifier '" + node.name + "'");
    if (parent.child(node.name)) throw SyntaxError(s.line, "duplicate node '" + node.name + "'");
    node.kind = s.keyword == "container" ? NodeKind::container
                : s.keyword == "list"    ? NodeKind::list
                : s.keyword == "leaf"    ? NodeKind::leaf
                                         : NodeKind::leaf_list;
    const auto path = parent_path + "/" + node.name;
    bool has_type = false;
    for (const auto& sub : s.subs) {
      if (data_or_annotation(sub, node, path)) continue;
      const bool leafy = node.kind == NodeKind::leaf || node.kind == NodeKind::leaf_list;
      if (leafy && sub.keyword == "type") {
        if (has_type) throw SyntaxError(sub.line, "duplicate 'type'");
        has_type = true;
        node.type_ref = type_stmt(sub, "@" + path);
      } else if (node.kind == NodeKind::leaf && sub.keyword == "mandatory") {
        const auto& v = require_arg(sub);
        if (v != "true" && v != "false") throw SyntaxError(sub.line, "mandatory must be true or false");
        node.mandatory = v == "true";
      } else if (node.kind == NodeKind::list && sub.keyword == "key") {
        node.keys = split_words(require_arg(sub));
      } else if (node.kind == NodeKind::list && sub.keyword == "unique") {
        auto group = split_words(require_arg(sub));
        for (const auto& g : group)
          if (!is_yang_identifier(g)) throw SyntaxError(sub.line, "unsupported unique argument '" + g + "'");
        node.unique.push_back(std::move(group));
      } else if (!is_informational(sub.keyword)) {
        unsupported(sub);
      }
    }
    if ((node.kind == NodeKind::leaf || node.kind == NodeKind::leaf_list) && !has_type)
      throw SyntaxError(s.line, "'" + node.name + "' has no type");
    // An explicit section without a section-name means an anonymous section.
    if (node.kind == NodeKind::container && node.uci.section && !node.uci.section_name) node.uci.section_name = "";
    parent.children.push_back(std::move(node));
  }

  // Returns the type reference for a leaf; restricted inline types become
  // synthesized typedefs keyed by `synth_name`.
  std::string type_stmt(const Statement& st, const std::string& synth_name) {
    TypeDecl decl;
    decl.base_ref = require_arg(st);
    decl.line = st.line;
    if (!is_keyword(decl.base_ref)) throw SyntaxError(st.line, "invalid type name '" + decl.base_ref + "'");
    bool restricted = false;
    for (const auto& r : st.subs) {
      if (r.keyword == "pattern") {
        for (const auto& x : r.subs)
          if (!is_informational(x.keyword)) unsupported(x);
        decl.patterns.push_back(require_arg(r));
      } else if (r.keyword == "range" || r.keyword == "length") {
        for (const auto& x : r.subs)
          if (!is_informational(x.keyword)) unsupported(x);
        auto& slot = r.keyword == "range" ? decl.range : decl.length;
        if (slot) throw SyntaxError(r.line, "duplicate '" + r.keyword + "'");
        slot = require_arg(r);
      } else if (r.keyword == "enum") {
        for (const auto& x : r.subs)
          if (!is_informational(x.keyword)) unsupported(x);
        const auto& e = require_arg(r);
        if (e.empty() || std::find(decl.enums.begin(), decl.enums.end(), e) != decl.enums.end())
          throw SyntaxError(r.line, "invalid or duplicate enum '" + e + "'");
        decl.enums.push_back(e);
      } else if (r.keyword == "fraction-digits") {
        const auto& v = require_arg(r);
        int fd = 0;
        for (char c : v) {
          if (c < '0' || c > '9' || fd > 100) throw SyntaxError(r.line, "invalid fraction-digits '" + v + "'");
          fd = fd * 10 + (c - '0');
        }
        if (v.empty()) throw SyntaxError(r.line, "invalid fraction-digits");
        decl.fraction_digits = fd;
      } else if (!is_informational(r.keyword)) {
        unsupported(r);
      } else {
        continue;
      }
      restricted = true;
    }
    if (!restricted) return decl.base_ref;
    module_.type_decls[synth_name] = std::move(decl);
    return synth_name;
  }

  void typedef_stmt(const Statement& st) {
    const auto& name = require_arg(st);
    if (!is_yang_identifier(name)) throw SyntaxError(st.line, "invalid typedef name '" + name + "'");
    if (base_from_string(name)) throw SyntaxError(st.line, "typedef shadows built-in type '" + name + "'");
    if (module_.type_decls.count(name)) throw SyntaxError(st.line, "duplicate typedef '" + name + "'");
    const Statement* type = nullptr;
    for (const auto& s : st.subs) {
      if (s.keyword == "type") {
        if (type) throw SyntaxError(s.line, "duplicate 'type'");
        type = &s;
      } else if (!is_informational(s.keyword)) {
        unsupported(s);
      }
    }
    if (!type) throw SyntaxError(st.line, "typedef '" + name + "' has no type");
    const auto ref = type_stmt(*type, name);
    if (ref != name) module_.type_decls[name] = TypeDecl{ref, {}, {}, {}, {}, {}, type->line};
  }

  Module module_;
  std::string extension_prefix_ = "\x01";  // unmatchable until imported
};

// ---------------------------------------------------------------------------

struct Scope {
  bool package = false;
  bool section = false;
  bool package_reported = false;
  bool in_list = false;
};

class AnnotationChecker {
 public:
  std::vector<Diagnostic> run(const Module& m) {
    Scope scope;
    visit(m.root, scope);
    return std::move(out_);
  }

 private:
  void report(const Node& n, std::string rule, std::string message) {
    out_.push_back(Diagnostic{std::move(rule), n.line, "'" + n.name + "': " + std::move(message)});
  }

  void visit(const Node& n, Scope scope) {
    const bool leafy = n.kind == NodeKind::leaf || n.kind == NodeKind::leaf_list;
    for (const auto& a : n.repeated_annotations) {
      if (a == "option") {
        report(n, "option-overridden", "uci:option is declared more than once");
      } else {
        report(n, "duplicate-annotation", "uci:" + a + " is declared more than once");
      }
    }

    if (scope.in_list && (n.kind == NodeKind::container || n.kind == NodeKind::list))
      report(n, "nested-in-list", "a container or list nested in a list cannot be mapped to UCI");

    if (n.uci.package) {
      scope.package = true;
      if (!uci::is_type_name(*n.uci.package))
        report(n, "invalid-uci-name", "package '" + *n.uci.package + "' is not a valid UCI name");
    }
    if (n.uci.section) {
      scope.section = true;
      if (!uci::is_type_name(*n.uci.section))
        report(n, "invalid-uci-name", "section '" + *n.uci.section + "' is not a valid UCI section type");
    }
    if (n.uci.section_name) {
      if (n.kind == NodeKind::list) {
        report(n, "list-has-section-name", "a list must not declare uci:section-name");
      } else if (!scope.section) {
        report(n, "section-name-without-section", "uci:section-name without a uci:section in scope");
      }
      if (!n.uci.section_name->empty() && !uci::is_identifier(*n.uci.section_name))
        report(n, "invalid-uci-name", "section-name '" + *n.uci.section_name + "' is not a valid UCI name");
    }
    if (n.uci.option) {
      if (!leafy) {
        report(n, "option-not-on-leaf", "uci:option is only allowed on leaf and leaf-list");
      } else if (!uci::is_identifier(*n.uci.option)) {
        report(n, "invalid-uci-name", "option '" + *n.uci.option + "' is not a valid UCI name");
      }
    }
    if (n.uci.leaf_as_name) {
      if (n.kind != NodeKind::list) {
        report(n, "leaf-as-name-not-on-list", "uci:leaf-as-name is only allowed on a list");
      } else {
        const Node* leaf = n.child(*n.uci.leaf_as_name);
        if (!leaf || leaf->kind != NodeKind::leaf) {
          report(n, "leaf-as-name-unknown-leaf", "leaf-as-name '" + *n.uci.leaf_as_name + "' is not a child leaf");
        } else if (std::find(n.keys.begin(), n.keys.end(), *n.uci.leaf_as_name) == n.keys.end()) {
          report(n, "leaf-as-name-not-key", "leaf-as-name '" + *n.uci.leaf_as_name + "' is not a key leaf");
        }
      }
    }

    if (n.kind != NodeKind::module && !scope.package && !scope.package_reported) {
      report(n, "missing-package", "no uci:package in scope");
      scope.package_reported = true;
    }

    if (n.kind == NodeKind::list) {
      if (!n.uci.section) report(n, "list-missing-section", "a list must declare uci:section");
      if (n.keys.empty()) report(n, "list-missing-key", "a list must declare a key");
      for (const auto& k : n.keys) {
        const Node* c = n.child(k);
        if (!c || c->kind != NodeKind::leaf) report(n, "unknown-key-leaf", "key '" + k + "' is not a child leaf");
      }
      for (const auto& group : n.unique)
        for (const auto& u : group) {
          const Node* c = n.child(u);
          if (!c || c->kind != NodeKind::leaf)
            report(n, "unknown-unique-leaf", "unique '" + u + "' is not a child leaf");
        }
    }
    if (leafy) {
      if (!n.uci.option) report(n, "missing-option", "leaf without uci:option");
      if (!scope.section) report(n, "missing-section", "leaf without a uci:section in scope");
    }

    scope.in_list = scope.in_list || n.kind == NodeKind::list;
    for (const auto& c : n.children) visit(c, scope);
  }

  std::vector<Diagnostic> out_;
};

}  // namespace

const Node* Node::child(std::string_view child_name) const {
  for (const auto& c : children)
    if (c.name == child_name) return &c;
  return nullptr;
}

bool Node::operator==(const Node& o) const {
  return kind == o.kind && name == o.name && uci == o.uci && children == o.children && type_ref == o.type_ref &&
         keys == o.keys && unique == o.unique && mandatory == o.mandatory;
}

bool Module::operator==(const Module& o) const {
  return name == o.name && namespace_uri == o.namespace_uri && prefix == o.prefix && typedefs == o.typedefs &&
         root == o.root;
}

const Module* find_module(const ModelSet& set, std::string_view name) {
  for (const auto& m : set)
    if (m.name == name) return &m;
  return nullptr;
}

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::module: return "module";
    case NodeKind::container: return "container";
    case NodeKind::list: return "list";
    case NodeKind::leaf: return "leaf";
    case NodeKind::leaf_list: return "leaf-list";
  }
  return "?";
}

std::optional<NodeKind> kind_from_string(std::string_view name) {
  for (auto k : {NodeKind::module, NodeKind::container, NodeKind::list, NodeKind::leaf, NodeKind::leaf_list})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

Module parse_yang(std::string_view text) {
  StatementParser parser(text);
  const auto statements = parser.parse_all();
  if (statements.empty()) throw SyntaxError(1, "no module statement");
  if (statements.size() > 1) throw SyntaxError(statements[1].line, "more than one top-level statement");
  return ModuleBuilder{}.build(statements.front());
}

std::vector<Diagnostic> check_annotations(const Module& module) { return AnnotationChecker{}.run(module); }

}  // namespace orc::yang
