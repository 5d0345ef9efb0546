#pragma once

// Mapping between RESTCONF resources (JSON, URI segments) and UCI paths,
// driven by the UCI annotations of a runtime model.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "orc/json.hpp"
#include "orc/uci.hpp"
#include "orc/yang.hpp"

namespace orc::datamap {

/// UCI location accumulated while walking the schema. Annotations on a node
/// override what its ancestors set but never clear it.
struct PathContext {
  std::string package;
  std::string section;
  std::optional<std::string> section_name;  // "" = anonymous, single section
  std::optional<std::size_t> index;
  std::optional<std::string> option;
  bool list_level = false;  // at a list node, before an entry is chosen

  /// Applies the UCI annotations of `node`.
  void enter(const yang::Node& node);
  /// Selects one list entry, by position or (leaf-as-name lists) by name.
  void select_entry(std::optional<std::size_t> index, std::optional<std::string> name);

  /// The section this context addresses (option unset).
  uci::Path section_path() const;
  uci::Path option_path(const std::string& option) const;
  /// Dotted trail such as "example.device.@interfaces[0].name".
  std::string trail() const;
};

/// Context at the module root.
PathContext module_context(const yang::Module& module);

struct ResolvedTarget {
  const yang::Module* module = nullptr;  // nullptr for the datastore root
  const yang::Node* node = nullptr;
  PathContext ctx;
  std::optional<std::string> list_entry;  // key text when an entry was addressed
  bool entry_exists = true;               // false only with LocateOptions::allow_new_entry

  bool is_root() const { return module == nullptr; }
  bool is_module_root() const { return node && node->kind == yang::NodeKind::module; }
};

struct LocateOptions {
  // The final segment may name a list entry that does not exist yet (PUT).
  bool allow_new_entry = false;
};

/// Resolves URI segments ("example:device", "interfaces=eth0", ...). An empty
/// segment list addresses the datastore root. Throws UnknownModule,
/// UnknownNode, UnknownListEntry, MissingKey.
ResolvedTarget locate(const yang::ModelSet& models, std::span<const std::string> segments,
                      const uci::Snapshot& store, LocateOptions options = {});

/// Index of the list entry whose key leaves equal `key_values` (RFC 8040
/// comma-separated form), or its name for leaf-as-name lists.
struct EntryRef {
  std::optional<std::size_t> index;
  std::optional<std::string> name;
};
std::optional<EntryRef> find_list_entry(const yang::Node& list, const PathContext& list_ctx,
                                        const std::vector<std::string>& key_values, const uci::Snapshot& store);

/// Renders the stored data below `target`. Absent leaves and empty nested
/// containers are omitted; nullopt when nothing is stored for a leaf,
/// leaf-list or list entry. A container target always yields an object.
std::optional<Json> uci_to_json(const ResolvedTarget& target, const uci::Snapshot& store);

/// UCI text to JSON per the leaf's base type. Values that do not decode are
/// returned as JSON strings.
Json decode_value(const yang::TypeSpec& type, const std::string& text);
/// JSON leaf value to UCI text.
std::string encode_value(const Json& value);

enum class WriteMode { create, replace, append };

/// One body member resolved against the target: either the target itself or
/// one of its children.
struct BodySubject {
  const yang::Module* module = nullptr;
  const yang::Node* node = nullptr;
  PathContext ctx;
  std::string json_key;  // member name as it appears in the body
  bool is_target = false;
  bool is_list_entry = false;  // value is the one-element array of an addressed entry
  const Json* value = nullptr;
};

/// Throws RootMismatch or ShapeError("not-an-object").
std::vector<BodySubject> body_subjects(const yang::ModelSet& models, const ResolvedTarget& target, const Json& body);

/// Depth-first flattening of `body` into UCI triples. List entries start at
/// index 0 (create/replace) or at the current section count (append); an
/// addressed entry keeps its position. Throws RootMismatch, ShapeError.
std::vector<uci::FlattenedEntry> json_to_entries(const yang::ModelSet& models, const ResolvedTarget& target,
                                                 const Json& body, WriteMode mode, const uci::Snapshot& store);

/// UCI region a replace-mode write of `target` clears before writing.
std::vector<uci::ClearOp> replace_scope(const ResolvedTarget& target);

/// Store path removed by DELETE on `target`: the option/list of a leaf, the
/// section of a container or list entry, every section of a list. nullopt for
/// containers without a section of their own (their leaves are cleared via
/// replace_scope instead). Throws UnknownListEntry for an addressed entry that
/// does not exist.
std::optional<uci::Path> resolve_delete(const ResolvedTarget& target);

/// True if anything is stored for the target.
bool target_exists(const ResolvedTarget& target, const uci::Snapshot& store);

/// Splits "name=value" into name and percent-decoded key values.
struct Segment {
  std::string module;  // empty if unqualified
  std::string name;
  std::optional<std::vector<std::string>> keys;
};
Segment parse_segment(const std::string& text);

/// A node contributes its own UCI section when it declares section or
/// section-name (containers) or is a list entry.
bool owns_section(const yang::Node& node);

}  // namespace orc::datamap
