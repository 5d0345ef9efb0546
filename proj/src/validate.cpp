#include "orc/validate.hpp"

#include <algorithm>
#include <map>
#include <regex>

#include "orc/error.hpp"

namespace orc::validate {

using datamap::PathContext;
using datamap::WriteMode;
using yang::Base;
using yang::Node;
using yang::NodeKind;
using yang::Number;

namespace {

ValidationError error(std::string path, Rule rule, std::string detail) {
  return ValidationError{std::move(path), rule, std::move(detail)};
}

const std::regex* compiled(const std::string& pattern) {
  thread_local std::map<std::string, std::optional<std::regex>> cache;
  auto it = cache.find(pattern);
  if (it == cache.end()) {
    std::optional<std::regex> re;
    try {
      re.emplace(pattern, std::regex::ECMAScript);
    } catch (const std::regex_error&) {
    }
    it = cache.emplace(pattern, std::move(re)).first;
  }
  return it->second ? &*it->second : nullptr;
}

std::size_t utf8_length(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

bool in_any(const std::vector<yang::Interval>& intervals, const Number& v) {
  return std::any_of(intervals.begin(), intervals.end(), [&](const auto& i) { return i.contains(v); });
}

std::string describe(const std::vector<yang::Interval>& intervals) {
  std::string out;
  for (const auto& i : intervals) {
    if (!out.empty()) out += " | ";
    out += i.min.str() + ".." + i.max.str();
  }
  return out;
}

bool is_integer_text(const std::string& s) {
  std::size_t i = (!s.empty() && (s[0] == '+' || s[0] == '-')) ? 1 : 0;
  return i < s.size() && std::all_of(s.begin() + static_cast<std::ptrdiff_t>(i), s.end(),
                                     [](char c) { return c >= '0' && c <= '9'; });
}

// Comparable form of a leaf value: its UCI text.
std::string canonical(const Json& v) { return v.is_primitive() && !v.is_null() ? datamap::encode_value(v) : v.dump(); }

const Json* member(const Json& object, const std::string& module, const std::string& name) {
  if (!object.is_object()) return nullptr;
  if (auto it = object.find(name); it != object.end()) return &*it;
  if (auto it = object.find(module + ":" + name); it != object.end()) return &*it;
  return nullptr;
}

std::optional<std::vector<std::string>> tuple_of(const Json& item, const std::string& module,
                                                  const std::vector<std::string>& leaves) {
  std::vector<std::string> out;
  for (const auto& l : leaves) {
    const Json* v = member(item, module, l);
    if (!v) return std::nullopt;
    out.push_back(canonical(*v));
  }
  return out;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : ",") + p;
  return out;
}

// Module name is needed to accept qualified member names inside items.
std::vector<ValidationError> uniqueness(const std::string& module, const Node& list, const Json& items,
                                        const Json& existing, const std::string& json_path) {
  std::vector<ValidationError> out;
  std::vector<std::vector<std::string>> groups;
  if (!list.keys.empty()) groups.push_back(list.keys);
  for (const auto& u : list.unique) groups.push_back(u);

  std::vector<std::map<std::vector<std::string>, bool>> seen(groups.size());
  for (const auto& e : existing) {
    for (std::size_t g = 0; g < groups.size(); ++g)
      if (auto t = tuple_of(e, module, groups[g])) seen[g][*t] = true;
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    for (std::size_t g = 0; g < groups.size(); ++g) {
      auto t = tuple_of(items[i], module, groups[g]);
      if (!t) continue;
      if (seen[g].count(*t)) {
        const bool is_key = g == 0 && !list.keys.empty();
        out.push_back(error(json_path + "[" + std::to_string(i) + "]",
                            is_key ? Rule::duplicate_key : Rule::unique_violation,
                            (is_key ? "duplicate key (" : "duplicate unique value (") + join(*t) + ")"));
      } else {
        seen[g][*t] = true;
      }
    }
  }
  return out;
}

class TreeChecker {
 public:
  TreeChecker(const yang::Module& module, const uci::Snapshot& store, std::vector<ValidationError>& out)
      : module_(module), store_(store), out_(out) {}

  // `check_exists`: the store may already hold this node (create mode).
  void node(const Node& n, const Json& value, const PathContext& ctx, const std::string& path, WriteMode mode,
            bool check_exists) {
    switch (n.kind) {
      case NodeKind::leaf:
        if (auto e = verify_leaf(yang::leaf_type(module_, n), value, path)) {
          out_.push_back(std::move(*e));
        } else if (check_exists && mode == WriteMode::create && stored(ctx)) {
          out_.push_back(error(path, Rule::exists_conflict, "leaf '" + n.name + "' already exists"));
        }
        break;
      case NodeKind::leaf_list: leaf_list(n, value, ctx, path, mode, check_exists); break;
      case NodeKind::list: list(n, value, ctx, path, mode, check_exists); break;
      case NodeKind::container:
      case NodeKind::module: {
        if (!value.is_object()) {
          out_.push_back(error(path, Rule::wrong_shape, "container '" + n.name + "' needs a JSON object"));
          return;
        }
        if (check_exists && mode == WriteMode::create && datamap::owns_section(n) && section_exists(ctx)) {
          out_.push_back(error(path, Rule::exists_conflict, "'" + n.name + "' already exists"));
          check_exists = false;
        }
        object(n, value, ctx, path, mode, check_exists);
        break;
      }
    }
  }

  // Children of a container or list entry, in document order.
  void object(const Node& n, const Json& value, const PathContext& ctx, const std::string& path, WriteMode mode,
              bool check_exists) {
    std::map<const Node*, std::string> matched;
    for (const auto& [key, child_value] : value.items()) {
      const auto colon = key.find(':');
      const std::string prefix = colon == std::string::npos ? "" : key.substr(0, colon);
      const std::string name = colon == std::string::npos ? key : key.substr(colon + 1);
      const Node* c = (prefix.empty() || prefix == module_.name) ? n.child(name) : nullptr;
      const std::string child_path = path + "/" + key;
      if (!c) {
        out_.push_back(error(child_path, Rule::unknown_node, "'" + n.name + "' has no child '" + key + "'"));
        continue;
      }
      if (matched.count(c)) {
        out_.push_back(error(child_path, Rule::wrong_shape, "'" + c->name + "' given twice"));
        continue;
      }
      matched[c] = key;
      PathContext child_ctx = ctx;
      child_ctx.enter(*c);
      node(*c, child_value, child_ctx, child_path, mode, check_exists);
    }
    for (const auto& c : n.children) {
      if (c.kind == NodeKind::leaf && c.mandatory && !matched.count(&c) &&
          std::find(n.keys.begin(), n.keys.end(), c.name) == n.keys.end())
        out_.push_back(error(path + "/" + c.name, Rule::mandatory_missing, "mandatory leaf '" + c.name + "' is missing"));
    }
  }

  // One entry of list `n`. Returns false if it was not an object.
  bool entry(const Node& n, const Json& item, const PathContext& ctx, const std::string& path, WriteMode mode) {
    if (!item.is_object()) {
      out_.push_back(error(path, Rule::wrong_shape, "entries of '" + n.name + "' must be JSON objects"));
      return false;
    }
    for (const auto& k : n.keys) {
      const Json* v = member(item, module_.name, k);
      if (!v) {
        out_.push_back(error(path + "/" + k, Rule::missing_key, "key leaf '" + k + "' is missing"));
      } else if (n.uci.leaf_as_name && *n.uci.leaf_as_name == k && n.child(k) &&
                 !verify_leaf(yang::leaf_type(module_, *n.child(k)), *v) && !uci::is_identifier(canonical(*v))) {
        out_.push_back(error(path + "/" + k, Rule::bad_lexical,
                             "'" + canonical(*v) + "' cannot name a UCI section ([A-Za-z0-9_]+)"));
      }
    }
    object(n, item, ctx, path, mode, false);
    return true;
  }

  void list(const Node& n, const Json& value, const PathContext& ctx, const std::string& path, WriteMode mode,
            bool check_exists) {
    if (!value.is_array()) {
      out_.push_back(error(path, Rule::wrong_shape, "list '" + n.name + "' needs a JSON array"));
      return;
    }
    if (check_exists && mode == WriteMode::create && !n.uci.leaf_as_name &&
        store_.count_sections(ctx.package, ctx.section) > 0) {
      out_.push_back(error(path, Rule::exists_conflict, "list '" + n.name + "' already has entries"));
    }
    bool all_objects = true;
    for (std::size_t i = 0; i < value.size(); ++i)
      all_objects &= entry(n, value[i], ctx, path + "[" + std::to_string(i) + "]", mode);
    if (!all_objects) return;
    const Json existing = (mode == WriteMode::replace || !check_exists) ? Json::array() : current_items(n, ctx);
    for (auto& e : uniqueness(module_.name, n, value, existing, path)) out_.push_back(std::move(e));
  }

  void leaf_list(const Node& n, const Json& value, const PathContext& ctx, const std::string& path, WriteMode mode,
                 bool check_exists) {
    if (!value.is_array()) {
      out_.push_back(error(path, Rule::wrong_shape, "leaf-list '" + n.name + "' needs a JSON array"));
      return;
    }
    const auto type = yang::leaf_type(module_, n);
    std::map<std::string, bool> seen;
    bool ok = true;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const auto item_path = path + "[" + std::to_string(i) + "]";
      if (auto e = verify_leaf(type, value[i], item_path)) {
        out_.push_back(std::move(*e));
        ok = false;
        continue;
      }
      if (!seen.emplace(canonical(value[i]), true).second)
        out_.push_back(error(item_path, Rule::duplicate_key, "duplicate leaf-list value '" + canonical(value[i]) + "'"));
    }
    if (ok && check_exists && mode == WriteMode::create && stored(ctx))
      out_.push_back(error(path, Rule::exists_conflict, "leaf-list '" + n.name + "' already exists"));
  }

  Json current_items(const Node& list_node, const PathContext& ctx) const {
    datamap::ResolvedTarget t;
    t.module = &module_;
    t.node = &list_node;
    t.ctx = ctx;
    t.ctx.list_level = true;
    t.ctx.index.reset();
    return datamap::uci_to_json(t, store_).value_or(Json::array());
  }

 private:
  bool stored(const PathContext& ctx) const {
    if (!ctx.option || ctx.section.empty()) return false;
    try {
      return store_.read_value(ctx.section_path().with_option(*ctx.option)).has_value();
    } catch (const AmbiguousPath&) {
      return true;
    }
  }

  bool section_exists(const PathContext& ctx) const {
    const auto p = ctx.section_path();
    const auto& doc = store_.document(p.package);
    if (p.section_name) return doc.find_named(p.section_type, *p.section_name) != nullptr;
    if (p.index) return doc.find_indexed(p.section_type, *p.index) != nullptr;
    return doc.count(p.section_type) > 0;
  }

  const yang::Module& module_;
  const uci::Snapshot& store_;
  std::vector<ValidationError>& out_;
};

// Subject of a list-entry target: the body value must hold exactly that entry.
void verify_entry_target(TreeChecker& checker, const yang::Module& module, const datamap::ResolvedTarget& target,
                         const Json& value, const std::string& path, WriteMode mode,
                         std::vector<ValidationError>& out) {
  const Node& list = *target.node;
  const Json* item = &value;
  std::string item_path = path;
  if (value.is_array()) {
    if (value.size() != 1) {
      out.push_back(error(path, Rule::wrong_shape, "a list entry resource takes exactly one entry"));
      return;
    }
    item = &value[0];
    item_path = path + "[0]";
  }
  if (!checker.entry(list, *item, target.ctx, item_path, mode)) return;

  const auto body_keys = tuple_of(*item, module.name, list.keys);
  if (body_keys && join(*body_keys) != *target.list_entry)
    out.push_back(error(item_path + "/" + list.keys.front(), Rule::missing_key,
                        "key (" + join(*body_keys) + ") does not match the URI key (" + *target.list_entry + ")"));

  Json others = Json::array();
  for (const auto& e : checker.current_items(list, target.ctx)) {
    const auto t = tuple_of(e, module.name, list.keys);
    if (!t || join(*t) != *target.list_entry) others.push_back(e);
  }
  for (auto& e : uniqueness(module.name, list, Json::array({*item}), others, path)) {
    e.json_path = item_path;
    out.push_back(std::move(e));
  }
}

}  // namespace

std::string_view to_string(Rule rule) {
  switch (rule) {
    case Rule::unknown_node: return "unknown-node";
    case Rule::wrong_shape: return "wrong-shape";
    case Rule::bad_lexical: return "bad-lexical";
    case Rule::pattern: return "pattern";
    case Rule::range: return "range";
    case Rule::missing_key: return "missing-key";
    case Rule::duplicate_key: return "duplicate-key";
    case Rule::unique_violation: return "unique-violation";
    case Rule::mandatory_missing: return "mandatory-missing";
    case Rule::exists_conflict: return "exists-conflict";
  }
  return "unknown";
}

Json to_json(const ValidationError& e) {
  return Json{{"path", e.json_path}, {"rule", std::string(to_string(e.rule))}, {"detail", e.detail}};
}

std::optional<ValidationError> verify_leaf(const yang::TypeSpec& spec, const Json& value, const std::string& path) {
  const auto base_name = std::string(yang::to_string(spec.base));
  std::optional<Number> number;

  switch (spec.base) {
    case Base::boolean:
      if (!value.is_boolean()) return error(path, Rule::bad_lexical, "expected JSON true or false");
      return std::nullopt;
    case Base::int8:
    case Base::int16:
    case Base::int32:
    case Base::uint8:
    case Base::uint16:
    case Base::uint32:
      if (value.is_number_unsigned()) {
        number = Number::from_integer(value.get<std::uint64_t>());
      } else if (value.is_number_integer()) {
        number = Number::from_integer(value.get<std::int64_t>());
      } else {
        return error(path, Rule::bad_lexical, base_name + " must be a JSON number without fraction");
      }
      break;
    case Base::int64:
    case Base::uint64:
    case Base::decimal64: {
      if (!value.is_string()) return error(path, Rule::bad_lexical, base_name + " must be a JSON string");
      const auto& text = value.get_ref<const std::string&>();
      if (spec.base != Base::decimal64 && !is_integer_text(text))
        return error(path, Rule::bad_lexical, "'" + text + "' is not an integer");
      number = Number::parse(text);
      if (!number) return error(path, Rule::bad_lexical, "'" + text + "' is not a " + base_name + " value");
      if (spec.base == Base::decimal64 && spec.fraction_digits && number->fraction_digits() > *spec.fraction_digits)
        return error(path, Rule::bad_lexical,
                     "'" + text + "' has more than " + std::to_string(*spec.fraction_digits) + " fraction digits");
      break;
    }
    case Base::string:
    case Base::enumeration: {
      if (!value.is_string()) return error(path, Rule::bad_lexical, base_name + " must be a JSON string");
      const auto& text = value.get_ref<const std::string&>();
      if (!uci::is_storable_value(text))
        return error(path, Rule::bad_lexical, "value must be non-empty, single-line and free of single quotes");
      if (spec.base == Base::enumeration) {
        if (std::find(spec.enums.begin(), spec.enums.end(), text) == spec.enums.end())
          return error(path, Rule::bad_lexical, "'" + text + "' is not an enum value");
        return std::nullopt;
      }
      for (const auto& p : spec.patterns) {
        const auto* re = compiled(p);
        if (!re) return error(path, Rule::pattern, "pattern '" + p + "' is not supported");
        if (!std::regex_match(text, *re)) return error(path, Rule::pattern, "'" + text + "' does not match '" + p + "'");
      }
      if (!spec.length.empty() && !in_any(spec.length, Number::from_integer(utf8_length(text))))
        return error(path, Rule::range, "length " + std::to_string(utf8_length(text)) + " outside " + describe(spec.length));
      return std::nullopt;
    }
  }

  const auto bounds = yang::base_bounds(spec.base, spec.fraction_digits);
  if (!bounds.contains(*number))
    return error(path, Rule::range, number->str() + " outside " + base_name + " bounds " + describe({bounds}));
  if (!spec.range.empty() && !in_any(spec.range, *number))
    return error(path, Rule::range, number->str() + " outside " + describe(spec.range));
  return std::nullopt;
}

std::vector<ValidationError> verify_list_uniqueness(const Node& list, const Json& items, const Json& existing,
                                                    const std::string& json_path) {
  return uniqueness("", list, items, existing, json_path);
}

std::vector<ValidationError> verify_tree(const yang::ModelSet& models, const datamap::ResolvedTarget& target,
                                         const Json& body, const uci::Snapshot& store, WriteMode mode) {
  std::vector<ValidationError> out;
  if (!body.is_object()) {
    out.push_back(error("/", Rule::wrong_shape, "request body must be a JSON object"));
    return out;
  }
  if (body.empty()) {
    out.push_back(error("/", Rule::wrong_shape, "request body has no members"));
    return out;
  }

  for (const auto& [key, value] : body.items()) {
    const auto colon = key.find(':');
    const std::string prefix = colon == std::string::npos ? "" : key.substr(0, colon);
    const std::string name = colon == std::string::npos ? key : key.substr(colon + 1);
    const std::string path = "/" + key;

    const yang::Module* module = target.module;
    const Node* node = nullptr;
    PathContext ctx;
    bool is_target = false;
    if (target.is_root() || target.is_module_root()) {
      if (target.is_root()) module = yang::find_module(models, prefix);
      if (module && prefix == module->name) node = module->root.child(name);
      if (node) {
        ctx = datamap::module_context(*module);
        ctx.enter(*node);
      }
    } else if (prefix.empty() || prefix == module->name) {
      if (name == target.node->name) {
        node = target.node;
        ctx = target.ctx;
        is_target = true;
      } else if (!(target.node->kind == NodeKind::list && target.ctx.list_level)) {
        node = target.node->child(name);
        if (node) {
          ctx = target.ctx;
          ctx.enter(*node);
        }
      }
    }
    if (!node) {
      out.push_back(error(path, Rule::unknown_node, "'" + key + "' is neither the target nor one of its children"));
      continue;
    }

    TreeChecker checker(*module, store, out);
    if (is_target && target.list_entry) {
      verify_entry_target(checker, *module, target, value, path, mode, out);
      continue;
    }
    const WriteMode m = (mode == WriteMode::create && node->kind == NodeKind::list) ? WriteMode::append : mode;
    checker.node(*node, value, ctx, path, m, true);
  }
  return out;
}

}  // namespace orc::validate
