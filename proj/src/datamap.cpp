#include "orc/datamap.hpp"

#include <charconv>
#include <cstdint>

#include "orc/error.hpp"

namespace orc::datamap {

using yang::Node;
using yang::NodeKind;

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && hex_value(s[i + 1]) >= 0 && hex_value(s[i + 2]) >= 0) {
      out.push_back(static_cast<char>(hex_value(s[i + 1]) * 16 + hex_value(s[i + 2])));
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

// Body members are either "name" or "module:name".
const Json* find_member(const Json& object, const std::string& module, const std::string& name) {
  if (auto it = object.find(name); it != object.end()) return &*it;
  if (auto it = object.find(module + ":" + name); it != object.end()) return &*it;
  return nullptr;
}

std::pair<std::string, std::string> split_qualified(const std::string& key) {
  const auto colon = key.find(':');
  if (colon == std::string::npos) return {"", key};
  return {key.substr(0, colon), key.substr(colon + 1)};
}

std::optional<std::string> single_value(const std::optional<uci::Value>& v) {
  if (!v) return std::nullopt;
  if (const auto* s = std::get_if<std::string>(&*v)) return *s;
  const auto& many = std::get<std::vector<std::string>>(*v);
  if (many.empty()) return std::nullopt;
  return many.back();
}

class Renderer {
 public:
  Renderer(const yang::Module& module, const uci::Snapshot& store) : module_(module), store_(store) {}

  std::optional<Json> node(const Node& n, const PathContext& ctx, bool top) const {
    switch (n.kind) {
      case NodeKind::leaf: {
        if (!ctx.option) return std::nullopt;
        auto v = single_value(store_.read_value(ctx.section_path().with_option(*ctx.option)));
        if (!v) return std::nullopt;
        return decode_value(yang::leaf_type(module_, n), *v);
      }
      case NodeKind::leaf_list: {
        if (!ctx.option) return std::nullopt;
        const auto v = store_.read_value(ctx.section_path().with_option(*ctx.option));
        if (!v) return std::nullopt;
        const auto type = yang::leaf_type(module_, n);
        Json arr = Json::array();
        if (const auto* s = std::get_if<std::string>(&*v)) {
          arr.push_back(decode_value(type, *s));
        } else {
          for (const auto& item : std::get<std::vector<std::string>>(*v)) arr.push_back(decode_value(type, item));
        }
        return arr;
      }
      case NodeKind::list: {
        if (!ctx.list_level) return entry(n, ctx);
        Json arr = Json::array();
        const auto count = store_.count_sections(ctx.package, ctx.section);
        for (std::size_t i = 0; i < count; ++i) {
          PathContext item = ctx;
          item.select_entry(i, std::nullopt);
          arr.push_back(entry(n, item));
        }
        if (arr.empty() && !top) return std::nullopt;
        return arr;
      }
      case NodeKind::container:
      case NodeKind::module: {
        Json obj = children(n, ctx, n.kind == NodeKind::module);
        if (obj.empty() && !top) return std::nullopt;
        return obj;
      }
    }
    return std::nullopt;
  }

  Json entry(const Node& list, const PathContext& ctx) const { return children(list, ctx, false); }

 private:
  Json children(const Node& n, const PathContext& ctx, bool qualify) const {
    Json obj = Json::object();
    for (const auto& c : n.children) {
      PathContext child_ctx = ctx;
      child_ctx.enter(c);
      if (auto v = node(c, child_ctx, false)) obj[qualify ? module_.name + ":" + c.name : c.name] = std::move(*v);
    }
    return obj;
  }

  const yang::Module& module_;
  const uci::Snapshot& store_;
};

struct Flattener {
  const yang::Module& module;
  const uci::Snapshot& store;
  WriteMode mode;
  std::vector<uci::FlattenedEntry>& out;

  void node(const Node& n, const Json& value, const PathContext& ctx) {
    switch (n.kind) {
      case NodeKind::leaf:
        if (!value.is_primitive() || value.is_null())
          throw ShapeError("wrong-shape", "leaf '" + n.name + "' needs a scalar value");
        emit(ctx, uci::FlatKind::option, encode_value(value));
        break;
      case NodeKind::leaf_list:
        if (!value.is_array()) throw ShapeError("not-an-array", "leaf-list '" + n.name + "' needs an array");
        for (const auto& v : value) {
          if (!v.is_primitive() || v.is_null())
            throw ShapeError("wrong-shape", "leaf-list '" + n.name + "' needs scalar items");
          emit(ctx, uci::FlatKind::list, encode_value(v));
        }
        break;
      case NodeKind::list: {
        if (!value.is_array()) throw ShapeError("not-an-array", "list '" + n.name + "' needs an array");
        const std::size_t start = mode == WriteMode::append ? store.count_sections(ctx.package, ctx.section) : 0;
        for (std::size_t i = 0; i < value.size(); ++i) {
          PathContext item = ctx;
          select(n, value[i], item, start + i);
          entry(n, value[i], item);
        }
        break;
      }
      case NodeKind::container:
      case NodeKind::module:
        if (!value.is_object()) throw ShapeError("not-an-object", "container '" + n.name + "' needs an object");
        if (owns_section(n)) {
          uci::FlattenedEntry e{ctx.section_path(), uci::FlatKind::container, std::nullopt, ctx.trail()};
          out.push_back(std::move(e));
        }
        members(n, value, ctx);
        break;
    }
  }

  // Names a list entry: the leaf-as-name value, or the next position.
  void select(const Node& list, const Json& item, PathContext& ctx, std::size_t index) const {
    if (list.uci.leaf_as_name) {
      const Json* key = item.is_object() ? find_member(item, module.name, *list.uci.leaf_as_name) : nullptr;
      if (!key || !key->is_primitive() || key->is_null())
        throw ShapeError("missing-key", "list entry of '" + list.name + "' lacks '" + *list.uci.leaf_as_name + "'");
      ctx.select_entry(std::nullopt, encode_value(*key));
    } else {
      ctx.select_entry(index, std::nullopt);
    }
  }

  void entry(const Node& list, const Json& item, const PathContext& ctx) {
    if (!item.is_object()) throw ShapeError("not-an-object", "entries of list '" + list.name + "' must be objects");
    members(list, item, ctx);
  }

  void members(const Node& n, const Json& object, const PathContext& ctx) {
    for (const auto& c : n.children) {
      const Json* v = find_member(object, module.name, c.name);
      if (!v) continue;
      PathContext child = ctx;
      child.enter(c);
      node(c, *v, child);
    }
    for (const auto& [key, value] : object.items()) {
      (void)value;
      const auto [mod, name] = split_qualified(key);
      if ((!mod.empty() && mod != module.name) || !n.child(name)) throw UnknownNode(key);
    }
  }

  void emit(const PathContext& ctx, uci::FlatKind kind, std::string value) {
    out.push_back(uci::FlattenedEntry{ctx.section_path().with_option(ctx.option.value_or("")), kind,
                                      std::move(value), ctx.trail()});
  }
};

void collect_clear(const Node& n, const PathContext& ctx, std::vector<uci::ClearOp>& out) {
  switch (n.kind) {
    case NodeKind::leaf:
    case NodeKind::leaf_list:
      if (ctx.option && !ctx.section.empty())
        out.push_back({uci::ClearOp::Kind::entry, ctx.section_path().with_option(*ctx.option)});
      return;
    case NodeKind::list:
      if (ctx.list_level) {
        out.push_back({uci::ClearOp::Kind::all_of_type, uci::Path{ctx.package, ctx.section, {}, {}, {}}});
        return;
      }
      break;
    default: break;
  }
  for (const auto& c : n.children) {
    PathContext child = ctx;
    child.enter(c);
    collect_clear(c, child, out);
  }
}

}  // namespace

// ---------------------------------------------------------------------------

void PathContext::enter(const Node& node) {
  if (node.uci.package) package = *node.uci.package;
  if (node.uci.section) {
    section = *node.uci.section;
    index.reset();
  }
  if (node.uci.section_name) section_name = *node.uci.section_name;
  if (node.uci.option) option = *node.uci.option;
  if (node.kind == NodeKind::list) {
    list_level = true;
    index.reset();
  }
}

void PathContext::select_entry(std::optional<std::size_t> i, std::optional<std::string> name) {
  list_level = false;
  if (name) {
    section_name = std::move(name);
    index.reset();
  } else {
    index = i;
  }
}

uci::Path PathContext::section_path() const {
  uci::Path p{package, section, {}, {}, {}};
  if (list_level) return p;
  if (index) {
    p.index = index;
  } else if (section_name && !section_name->empty()) {
    p.section_name = section_name;
  }
  return p;
}

uci::Path PathContext::option_path(const std::string& opt) const { return section_path().with_option(opt); }

std::string PathContext::trail() const {
  std::string out = package;
  const bool named = section_name && !section_name->empty();
  if (named) out += "." + *section_name;
  if (index) {
    out += ".@" + section + "[" + std::to_string(*index) + "]";
  } else if (!named && !section.empty()) {
    out += ".@" + section;
  }
  if (option) out += "." + *option;
  return out;
}

PathContext module_context(const yang::Module& module) {
  PathContext ctx;
  ctx.enter(module.root);
  return ctx;
}

bool owns_section(const Node& node) {
  return node.kind == NodeKind::container && (node.uci.section || node.uci.section_name);
}

Segment parse_segment(const std::string& text) {
  Segment seg;
  const auto eq = text.find('=');
  auto [module, name] = split_qualified(percent_decode(text.substr(0, eq)));
  seg.module = std::move(module);
  seg.name = std::move(name);
  if (eq != std::string::npos) {
    std::vector<std::string> keys;
    std::size_t start = eq + 1;
    for (;;) {
      const auto comma = text.find(',', start);
      keys.push_back(percent_decode(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    seg.keys = std::move(keys);
  }
  return seg;
}

std::optional<EntryRef> find_list_entry(const Node& list, const PathContext& list_ctx,
                                        const std::vector<std::string>& key_values, const uci::Snapshot& store) {
  if (key_values.size() != list.keys.size()) return std::nullopt;
  if (list.uci.leaf_as_name) {
    for (std::size_t k = 0; k < list.keys.size(); ++k) {
      if (list.keys[k] != *list.uci.leaf_as_name) continue;
      const auto& doc = store.document(list_ctx.package);
      if (doc.find_named(list_ctx.section, key_values[k])) return EntryRef{std::nullopt, key_values[k]};
      return std::nullopt;
    }
  }
  const auto count = store.count_sections(list_ctx.package, list_ctx.section);
  for (std::size_t i = 0; i < count; ++i) {
    PathContext item = list_ctx;
    item.select_entry(i, std::nullopt);
    bool match = true;
    for (std::size_t k = 0; k < list.keys.size() && match; ++k) {
      const Node* leaf = list.child(list.keys[k]);
      PathContext leaf_ctx = item;
      leaf_ctx.enter(*leaf);
      if (!leaf_ctx.option) return std::nullopt;
      match = single_value(store.read_value(leaf_ctx.section_path().with_option(*leaf_ctx.option))) == key_values[k];
    }
    if (match) return EntryRef{i, std::nullopt};
  }
  return std::nullopt;
}

ResolvedTarget locate(const yang::ModelSet& models, std::span<const std::string> segments,
                      const uci::Snapshot& store, LocateOptions options) {
  ResolvedTarget target;
  if (segments.empty()) return target;

  const auto first = parse_segment(segments[0]);
  if (first.module.empty()) throw UnknownNode(segments[0]);
  const auto* module = yang::find_module(models, first.module);
  if (!module) throw UnknownModule(first.module);
  target.module = module;
  target.node = &module->root;
  target.ctx = module_context(*module);

  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto seg = i == 0 ? first : parse_segment(segments[i]);
    if (!seg.module.empty() && seg.module != module->name) throw UnknownNode(segments[i]);
    const Node* parent = target.node;
    if (parent->kind == NodeKind::list && target.ctx.list_level) throw MissingKey(parent->name);
    if (!target.entry_exists) throw UnknownListEntry(*target.list_entry);
    const Node* child = parent->child(seg.name);
    if (!child) throw UnknownNode(segments[i]);
    target.node = child;
    target.ctx.enter(*child);
    target.list_entry.reset();

    if (seg.keys) {
      if (child->kind != NodeKind::list) throw UnknownNode(segments[i]);
      if (seg.keys->size() != child->keys.size()) throw MissingKey(child->name);
      std::string joined;
      for (const auto& k : *seg.keys) joined += (joined.empty() ? "" : ",") + k;
      target.list_entry = joined;
      if (auto ref = find_list_entry(*child, target.ctx, *seg.keys, store)) {
        target.ctx.select_entry(ref->index, ref->name);
      } else if (options.allow_new_entry && i + 1 == segments.size()) {
        target.entry_exists = false;
        target.ctx.list_level = false;
      } else {
        throw UnknownListEntry(joined);
      }
    }
  }
  return target;
}

Json decode_value(const yang::TypeSpec& type, const std::string& text) {
  using yang::Base;
  switch (type.base) {
    case Base::boolean:
      if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
      if (text == "false" || text == "0" || text == "no" || text == "off") return false;
      return text;
    case Base::int8:
    case Base::int16:
    case Base::int32: {
      std::int64_t v = 0;
      const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec == std::errc() && p == text.data() + text.size()) return v;
      return text;
    }
    case Base::uint8:
    case Base::uint16:
    case Base::uint32: {
      std::uint64_t v = 0;
      const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
      if (ec == std::errc() && p == text.data() + text.size()) return v;
      return text;
    }
    default: return text;
  }
}

std::string encode_value(const Json& value) {
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  if (value.is_string()) return value.get<std::string>();
  return value.dump();
}

std::optional<Json> uci_to_json(const ResolvedTarget& target, const uci::Snapshot& store) {
  if (target.is_root()) {
    throw std::invalid_argument("uci_to_json: the datastore root spans modules");
  }
  if (target.list_entry && !target.entry_exists) return std::nullopt;
  Renderer r(*target.module, store);
  if (target.list_entry) return Json::array({r.entry(*target.node, target.ctx)});
  return r.node(*target.node, target.ctx, target.node->kind != NodeKind::leaf &&
                                              target.node->kind != NodeKind::leaf_list);
}

std::vector<BodySubject> body_subjects(const yang::ModelSet& models, const ResolvedTarget& target, const Json& body) {
  if (!body.is_object()) throw ShapeError("not-an-object", "request body must be a JSON object");
  if (body.empty()) throw RootMismatch("request body has no members");
  std::vector<BodySubject> out;
  for (const auto& [key, value] : body.items()) {
    const auto [module_name, name] = split_qualified(key);
    BodySubject s;
    s.json_key = key;
    s.value = &value;
    if (target.is_root() || target.is_module_root()) {
      const auto* module = target.is_root() ? yang::find_module(models, module_name) : target.module;
      if (!module || module_name != module->name)
        throw RootMismatch("'" + key + "' does not name a top-level node of a loaded module");
      const Node* child = module->root.child(name);
      if (!child) throw RootMismatch("'" + key + "' is not a top-level node of '" + module->name + "'");
      s.module = module;
      s.node = child;
      s.ctx = module_context(*module);
      s.ctx.enter(*child);
    } else {
      s.module = target.module;
      if (!module_name.empty() && module_name != target.module->name)
        throw RootMismatch("'" + key + "' belongs to another module");
      if (name == target.node->name) {
        s.node = target.node;
        s.ctx = target.ctx;
        s.is_target = true;
        s.is_list_entry = target.list_entry.has_value();
      } else {
        const Node* child = target.node->child(name);
        if (!child || (target.node->kind == NodeKind::list && target.ctx.list_level))
          throw RootMismatch("'" + key + "' is neither the target nor one of its children");
        s.node = child;
        s.ctx = target.ctx;
        s.ctx.enter(*child);
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<uci::FlattenedEntry> json_to_entries(const yang::ModelSet& models, const ResolvedTarget& target,
                                                 const Json& body, WriteMode mode, const uci::Snapshot& store) {
  std::vector<uci::FlattenedEntry> out;
  for (const auto& s : body_subjects(models, target, body)) {
    const bool promote = mode == WriteMode::create && s.node->kind == NodeKind::list && !s.is_list_entry;
    Flattener f{*s.module, store, promote ? WriteMode::append : mode, out};
    if (!s.is_list_entry) {
      f.node(*s.node, *s.value, s.ctx);
      continue;
    }
    const Json* item = s.value;
    if (item->is_array()) {
      if (item->size() != 1) throw ShapeError("wrong-shape", "a list entry resource takes exactly one entry");
      item = &(*item)[0];
    }
    PathContext ctx = s.ctx;
    if (!target.entry_exists) f.select(*s.node, *item, ctx, store.count_sections(ctx.package, ctx.section));
    f.entry(*s.node, *item, ctx);
  }
  return out;
}

std::vector<uci::ClearOp> replace_scope(const ResolvedTarget& target) {
  std::vector<uci::ClearOp> out;
  if (target.is_root() || (target.list_entry && !target.entry_exists)) return out;
  collect_clear(*target.node, target.ctx, out);
  return out;
}

std::optional<uci::Path> resolve_delete(const ResolvedTarget& target) {
  if (target.is_root() || target.is_module_root()) return std::nullopt;
  const Node& n = *target.node;
  switch (n.kind) {
    case NodeKind::leaf:
    case NodeKind::leaf_list:
      if (!target.ctx.option) return std::nullopt;
      return target.ctx.section_path().with_option(*target.ctx.option);
    case NodeKind::list:
      if (target.list_entry && !target.entry_exists) throw UnknownListEntry(*target.list_entry);
      return target.ctx.section_path();
    case NodeKind::container:
      if (owns_section(n)) return target.ctx.section_path();
      return std::nullopt;
    case NodeKind::module: break;
  }
  return std::nullopt;
}

bool target_exists(const ResolvedTarget& target, const uci::Snapshot& store) {
  if (target.is_root() || target.is_module_root()) return true;
  if (target.list_entry) return target.entry_exists;
  const Node& n = *target.node;
  if (n.kind == NodeKind::list) return store.count_sections(target.ctx.package, target.ctx.section) > 0;
  if (n.kind == NodeKind::container && owns_section(n)) {
    const auto path = target.ctx.section_path();
    const auto& doc = store.document(path.package);
    if (path.section_name) return doc.find_named(path.section_type, *path.section_name) != nullptr;
    if (doc.count(path.section_type) > 0) return true;
  }
  const auto v = uci_to_json(target, store);
  if (!v) return false;
  return !(v->is_object() && v->empty());
}

}  // namespace orc::datamap
