#pragma once

// Request-body verification against the runtime model: JSON shape, RFC 7951
// lexical forms, restrictions, list keys and uniqueness, and existence
// conflicts with the store.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "orc/datamap.hpp"
#include "orc/json.hpp"
#include "orc/yang.hpp"

namespace orc::validate {

enum class Rule {
  unknown_node,
  wrong_shape,
  bad_lexical,
  pattern,
  range,
  missing_key,
  duplicate_key,
  unique_violation,
  mandatory_missing,
  exists_conflict,
};

/// "unknown-node", "wrong-shape", ...
std::string_view to_string(Rule rule);

struct ValidationError {
  std::string json_path;  // "/example:device/interfaces[0]/name"
  Rule rule = Rule::wrong_shape;
  std::string detail;

  bool operator==(const ValidationError&) const = default;
};

Json to_json(const ValidationError& e);

/// Checks one leaf value: JSON shape for the base, base bounds, then
/// patterns, length and range.
std::optional<ValidationError> verify_leaf(const yang::TypeSpec& spec, const Json& value,
                                           const std::string& json_path = "");

/// Walks `body` against the schema below `target` and collects every error in
/// document order. Mode `create` on a list subject behaves as `append`.
std::vector<ValidationError> verify_tree(const yang::ModelSet& models, const datamap::ResolvedTarget& target,
                                         const Json& body, const uci::Snapshot& store, datamap::WriteMode mode);

/// Key tuples and every unique group must be pairwise distinct over
/// `existing` followed by `items`. Reports each new item that repeats an
/// earlier one; `json_path` is the path of the `items` array.
std::vector<ValidationError> verify_list_uniqueness(const yang::Node& list, const Json& items, const Json& existing,
                                                    const std::string& json_path);

}  // namespace orc::validate
