#include <algorithm>

#include "orc/error.hpp"
#include "orc/yang.hpp"

namespace orc::yang {

namespace {

// JSON Pointer reference token (RFC 6901).
std::string token(const std::string& key) {
  std::string out;
  for (char c : key) {
    if (c == '~') out += "~0";
    else if (c == '/') out += "~1";
    else out += c;
  }
  return out;
}

Json intervals_to_json(const std::vector<Interval>& v) {
  Json out = Json::array();
  for (const auto& i : v) out.push_back(Json::array({i.min.str(), i.max.str()}));
  return out;
}

Json type_to_json(const TypeSpec& t) {
  Json j = Json::object();
  j["base"] = std::string(to_string(t.base));
  if (!t.patterns.empty()) j["patterns"] = t.patterns;
  if (!t.range.empty()) j["range"] = intervals_to_json(t.range);
  if (!t.length.empty()) j["length"] = intervals_to_json(t.length);
  if (!t.enums.empty()) j["enums"] = t.enums;
  if (t.fraction_digits) j["fraction-digits"] = *t.fraction_digits;
  return j;
}

void annotations_to_json(const UciAnnotations& a, Json& j) {
  if (a.package) j["package"] = *a.package;
  if (a.section) j["section"] = *a.section;
  if (a.section_name) j["section-name"] = *a.section_name;
  if (a.option) j["option"] = *a.option;
  if (a.leaf_as_name) j["leaf-as-name"] = *a.leaf_as_name;
}

Json node_to_json(const Node& n) {
  Json j = Json::object();
  j["type"] = std::string(to_string(n.kind));
  annotations_to_json(n.uci, j);
  if (n.kind == NodeKind::leaf || n.kind == NodeKind::leaf_list) {
    j["leaf-type"] = n.type_ref;
    if (n.mandatory) j["mandatory"] = true;
  }
  if (n.kind == NodeKind::list) {
    j["keys"] = n.keys;
    if (!n.unique.empty()) j["unique"] = n.unique;
  }
  if (n.is_data_tree()) {
    Json map = Json::object();
    for (const auto& c : n.children) map[c.name] = node_to_json(c);
    j["map"] = std::move(map);
  }
  return j;
}

// --- loading ---------------------------------------------------------------

class JinReader {
 public:
  Module read(const Json& doc) {
    Module m;
    m.root = node(doc, "", "");
    if (m.root.kind != NodeKind::module) throw JinFormatError("/type", "root node must be a module");
    m.name = opt_string(doc, "", "name").value_or("");
    m.namespace_uri = opt_string(doc, "", "namespace").value_or("");
    m.prefix = opt_string(doc, "", "prefix").value_or("");
    m.root.name = m.name;
    if (doc.contains("typedefs")) {
      const auto& t = doc["typedefs"];
      if (!t.is_object()) throw JinFormatError("/typedefs", "expected an object");
      for (const auto& [name, spec] : t.items()) m.typedefs[name] = type_spec(spec, "/typedefs/" + token(name));
    }
    check_types(m, m.root, "");
    return m;
  }

 private:
  static std::optional<std::string> opt_string(const Json& j, const std::string& path, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    const auto& v = j[key];
    if (!v.is_string()) throw JinFormatError(path + "/" + key, "expected a string");
    return v.get<std::string>();
  }

  static std::vector<std::string> string_array(const Json& v, const std::string& path) {
    if (!v.is_array()) throw JinFormatError(path, "expected an array");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) throw JinFormatError(path + "/" + std::to_string(i), "expected a string");
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  static std::vector<Interval> intervals(const Json& v, const std::string& path) {
    if (!v.is_array()) throw JinFormatError(path, "expected an array");
    std::vector<Interval> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto p = path + "/" + std::to_string(i);
      const auto& pair = v[i];
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
        throw JinFormatError(p, "expected a [min, max] pair of numeric strings");
      const auto lo = Number::parse(pair[0].get<std::string>());
      const auto hi = Number::parse(pair[1].get<std::string>());
      if (!lo || !hi || *hi < *lo) throw JinFormatError(p, "invalid interval");
      out.push_back({*lo, *hi});
    }
    return out;
  }

  static TypeSpec type_spec(const Json& j, const std::string& path) {
    if (!j.is_object()) throw JinFormatError(path, "expected an object");
    TypeSpec t;
    if (!j.contains("base")) throw JinFormatError(path + "/base", "missing required key");
    const auto base_name = opt_string(j, path, "base");
    const auto base = base_from_string(*base_name);
    if (!base) throw JinFormatError(path + "/base", "unknown built-in type '" + *base_name + "'");
    t.base = *base;
    if (j.contains("patterns")) t.patterns = string_array(j["patterns"], path + "/patterns");
    if (j.contains("range")) t.range = intervals(j["range"], path + "/range");
    if (j.contains("length")) t.length = intervals(j["length"], path + "/length");
    if (j.contains("enums")) t.enums = string_array(j["enums"], path + "/enums");
    if (j.contains("fraction-digits")) {
      const auto& fd = j["fraction-digits"];
      if (!fd.is_number_integer() || fd.get<int>() < 1 || fd.get<int>() > 18)
        throw JinFormatError(path + "/fraction-digits", "expected an integer 1..18");
      t.fraction_digits = fd.get<int>();
    }
    if (t.base == Base::decimal64 && !t.fraction_digits)
      throw JinFormatError(path + "/fraction-digits", "decimal64 requires fraction-digits");
    if (t.base == Base::enumeration && t.enums.empty())
      throw JinFormatError(path + "/enums", "enumeration requires enums");
    return t;
  }

  Node node(const Json& j, const std::string& path, const std::string& name) {
    if (!j.is_object()) throw JinFormatError(path.empty() ? "/" : path, "expected an object");
    Node n;
    n.name = name;
    if (!j.contains("type")) throw JinFormatError(path + "/type", "missing required key");
    const auto type_name = opt_string(j, path, "type");
    const auto kind = kind_from_string(*type_name);
    if (!kind) throw JinFormatError(path + "/type", "unknown node type '" + *type_name + "'");
    if (!path.empty() && *kind == NodeKind::module) throw JinFormatError(path + "/type", "nested module");
    n.kind = *kind;
    n.uci.package = opt_string(j, path, "package");
    n.uci.section = opt_string(j, path, "section");
    n.uci.section_name = opt_string(j, path, "section-name");
    n.uci.option = opt_string(j, path, "option");
    n.uci.leaf_as_name = opt_string(j, path, "leaf-as-name");

    if (n.is_data_tree()) {
      if (!j.contains("map")) throw JinFormatError(path + "/map", "missing required key");
      const auto& map = j["map"];
      if (!map.is_object()) throw JinFormatError(path + "/map", "expected an object");
      for (const auto& [child, value] : map.items()) n.children.push_back(node(value, path + "/map/" + token(child), child));
      if (j.contains("leaf-type")) throw JinFormatError(path + "/leaf-type", "not allowed on " + *type_name);
    } else {
      if (!j.contains("leaf-type")) throw JinFormatError(path + "/leaf-type", "missing required key");
      n.type_ref = *opt_string(j, path, "leaf-type");
      if (j.contains("map")) throw JinFormatError(path + "/map", "not allowed on " + *type_name);
    }
    if (j.contains("keys")) n.keys = string_array(j["keys"], path + "/keys");
    if (j.contains("unique")) {
      const auto& u = j["unique"];
      if (!u.is_array()) throw JinFormatError(path + "/unique", "expected an array");
      for (std::size_t i = 0; i < u.size(); ++i)
        n.unique.push_back(string_array(u[i], path + "/unique/" + std::to_string(i)));
    }
    if (j.contains("mandatory")) {
      if (!j["mandatory"].is_boolean()) throw JinFormatError(path + "/mandatory", "expected a boolean");
      n.mandatory = j["mandatory"].get<bool>();
    }
    if (n.kind == NodeKind::list) {
      for (const auto& k : n.keys) {
        const Node* c = n.child(k);
        if (!c || c->kind != NodeKind::leaf) throw JinFormatError(path + "/keys", "key '" + k + "' is not a child leaf");
      }
      for (std::size_t i = 0; i < n.unique.size(); ++i)
        for (const auto& u : n.unique[i])
          if (!n.child(u)) throw JinFormatError(path + "/unique/" + std::to_string(i), "unknown leaf '" + u + "'");
    }
    return n;
  }

  static void check_types(const Module& m, const Node& n, const std::string& path) {
    if (!n.is_data_tree()) {
      if (!base_from_string(n.type_ref) && !m.typedefs.count(n.type_ref))
        throw JinFormatError(path + "/leaf-type", "unknown type '" + n.type_ref + "'");
      if (n.type_ref == "decimal64" || n.type_ref == "enumeration")
        throw JinFormatError(path + "/leaf-type", "'" + n.type_ref + "' needs a typedef with restrictions");
    }
    for (const auto& c : n.children) check_types(m, c, path + "/map/" + c.name);
  }
};

}  // namespace

Json yang_to_jin_json(const Module& module) {
  const auto diagnostics = check_annotations(module);
  if (!diagnostics.empty()) {
    throw AnnotationError(module.name + ": " + std::to_string(diagnostics.size()) +
                          " annotation diagnostic(s), first: " + diagnostics.front().rule + ": " +
                          diagnostics.front().message);
  }
  // Fail early on unresolved references rather than emit a broken JIN file.
  std::vector<const Node*> stack{&module.root};
  while (!stack.empty()) {
    const Node* n = stack.back();
    stack.pop_back();
    if (!n->is_data_tree()) (void)leaf_type(module, *n);
    for (const auto& c : n->children) stack.push_back(&c);
  }

  Json j = Json::object();
  j["type"] = "module";
  j["name"] = module.name;
  j["namespace"] = module.namespace_uri;
  j["prefix"] = module.prefix;
  annotations_to_json(module.root.uci, j);
  j["map"] = node_to_json(module.root)["map"];
  Json typedefs = Json::object();
  for (const auto& [name, spec] : module.typedefs) typedefs[name] = type_to_json(spec);
  j["typedefs"] = std::move(typedefs);
  return j;
}

std::string yang_to_jin(const Module& module) { return yang_to_jin_json(module).dump(2) + "\n"; }

Module load_jin_json(const Json& doc) { return JinReader{}.read(doc); }

Module load_jin(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw JinFormatError("/", std::string("invalid JSON: ") + e.what());
  }
  return load_jin_json(doc);
}

}  // namespace orc::yang
