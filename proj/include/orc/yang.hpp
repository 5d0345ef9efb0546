#pragma once

// YANG subset with UCI mapping annotations, and its JSON rendering (JIN).
//
// Pipeline: parse_yang -> resolve_types -> check_annotations -> yang_to_jin
// offline; load_jin at request time.

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orc/json.hpp"

namespace orc::yang {

/// Name of the module that declares the UCI extension statements.
inline constexpr std::string_view kExtensionModule = "uci-extensions";

/// Exact fixed-point number with 18 fractional digits. Wide enough for every
/// YANG integer base and for decimal64 at any fraction-digits setting.
class Number {
 public:
  static constexpr int kScaleDigits = 18;

  Number() = default;
  static Number from_integer(__int128 v);
  /// Accepts `[+-]?digits[.digits]`; at most 20 integer and 18 fraction digits.
  static std::optional<Number> parse(std::string_view text);

  /// Shortest decimal text that parses back to the same value.
  std::string str() const;
  /// Digits after the decimal point that are actually used.
  int fraction_digits() const;
  bool is_integer() const { return fraction_digits() == 0; }

  auto operator<=>(const Number&) const = default;

 private:
  explicit Number(__int128 raw) : raw_(raw) {}
  __int128 raw_ = 0;
};

struct Interval {
  Number min;
  Number max;

  bool contains(const Number& v) const { return min <= v && v <= max; }
  bool operator==(const Interval&) const = default;
};

enum class Base {
  string,
  boolean,
  int8,
  int16,
  int32,
  int64,
  uint8,
  uint16,
  uint32,
  uint64,
  decimal64,
  enumeration,
};

std::string_view to_string(Base base);
std::optional<Base> base_from_string(std::string_view name);
bool is_integer_base(Base base);
bool is_numeric_base(Base base);
/// int64, uint64 and decimal64 travel as JSON strings.
bool is_string_encoded(Base base);
/// Value space of the base type (decimal64 scaled by fraction digits).
Interval base_bounds(Base base, std::optional<int> fraction_digits = std::nullopt);

/// A fully resolved type: built-in base plus every restriction collected
/// along the typedef chain. Every pattern must match; `range` and `length`
/// are unions of intervals.
struct TypeSpec {
  Base base = Base::string;
  std::vector<std::string> patterns;
  std::vector<Interval> range;
  std::vector<Interval> length;
  std::vector<std::string> enums;
  std::optional<int> fraction_digits;

  bool operator==(const TypeSpec&) const = default;
};

/// A type as written in source: a reference to a built-in or typedef plus
/// unparsed restriction arguments.
struct TypeDecl {
  std::string base_ref;
  std::vector<std::string> patterns;
  std::optional<std::string> range;
  std::optional<std::string> length;
  std::vector<std::string> enums;
  std::optional<int> fraction_digits;
  std::size_t line = 0;
};

/// Parses a range/length argument ("1..10 | 20..max") against the parent's
/// value space. Throws SyntaxError.
std::vector<Interval> parse_intervals(std::string_view text, const std::vector<Interval>& parent,
                                      std::optional<int> fraction_digits = std::nullopt);
/// Intersection of two interval unions.
std::vector<Interval> intersect(const std::vector<Interval>& a, const std::vector<Interval>& b);

enum class NodeKind { module, container, list, leaf, leaf_list };

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> kind_from_string(std::string_view name);

struct UciAnnotations {
  std::optional<std::string> package;
  std::optional<std::string> section;
  std::optional<std::string> section_name;  // "" marks an implicit anonymous section
  std::optional<std::string> option;
  std::optional<std::string> leaf_as_name;

  bool operator==(const UciAnnotations&) const = default;
};

struct Node {
  NodeKind kind = NodeKind::container;
  std::string name;
  UciAnnotations uci;
  std::vector<Node> children;
  std::string type_ref;  // leaf and leaf-list only
  std::vector<std::string> keys;
  std::vector<std::vector<std::string>> unique;
  bool mandatory = false;

  // Source bookkeeping; not part of the model and not compared.
  std::size_t line = 0;
  std::vector<std::string> repeated_annotations;

  const Node* child(std::string_view child_name) const;
  bool is_data_tree() const { return kind == NodeKind::module || kind == NodeKind::container || kind == NodeKind::list; }

  bool operator==(const Node& other) const;
};

struct Import {
  std::string module;
  std::string prefix;
};

struct Module {
  std::string name;
  std::string namespace_uri;
  std::string prefix;
  std::vector<Import> imports;
  std::map<std::string, TypeDecl> type_decls;  // as parsed
  std::map<std::string, TypeSpec> typedefs;    // resolved; the runtime table
  Node root;

  /// Runtime-model equality: name, namespace, prefix, typedefs and tree.
  bool operator==(const Module& other) const;
};

using ModelSet = std::vector<Module>;

const Module* find_module(const ModelSet& set, std::string_view name);

/// Parses one YANG module. Throws SyntaxError or UnsupportedStatement.
Module parse_yang(std::string_view text);

/// Resolves a type name as seen from `context`: a built-in, a local typedef,
/// or `prefix:name` from an import found in `imports`. Throws UnknownType.
TypeSpec resolve_type(const ModelSet& imports, const Module& context, std::string_view name);

/// Fills `module.typedefs` with every local typedef and every imported type a
/// leaf uses, and rewrites leaf type references to table keys
/// (`<module>:<name>` for imported types). Throws UnknownType, SyntaxError.
void resolve_types(Module& module, const ModelSet& imports);

/// Type of a leaf or leaf-list in a resolved/runtime module.
TypeSpec leaf_type(const Module& module, const Node& leaf);

struct Diagnostic {
  std::string rule;
  std::size_t line = 0;
  std::string message;
};

/// UCI mapping rule checks. Empty result means the module can be converted.
std::vector<Diagnostic> check_annotations(const Module& module);

/// JIN document for a resolved module. Throws AnnotationError when
/// check_annotations reports anything.
Json yang_to_jin_json(const Module& module);
std::string yang_to_jin(const Module& module);

/// Rebuilds the runtime model from JIN text. Throws JinFormatError.
Module load_jin(std::string_view text);
Module load_jin_json(const Json& doc);

}  // namespace orc::yang
