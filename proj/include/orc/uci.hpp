#pragma once

// In-memory model, parser, serializer and file-backed store for OpenWrt UCI
// configuration packages.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace orc::uci {

enum class EntryKind { option, list };

struct Entry {
  EntryKind kind = EntryKind::option;
  std::string name;
  std::string value;

  bool operator==(const Entry&) const = default;
};

struct Section {
  std::string type;
  std::optional<std::string> name;  // nullopt for anonymous sections
  std::vector<Entry> entries;

  bool operator==(const Section&) const = default;

  const Entry* find_option(std::string_view option) const;
  std::vector<std::string> list_values(std::string_view list) const;
  bool has_entry(std::string_view name) const;
};

struct Document {
  std::string package;
  std::vector<Section> sections;

  bool operator==(const Document&) const = default;

  std::size_t count(std::string_view type) const;
  Section* find_named(std::string_view type, std::string_view name);
  const Section* find_named(std::string_view type, std::string_view name) const;
  // Zero-based position among sections of `type`, named or not.
  Section* find_indexed(std::string_view type, std::size_t index);
  const Section* find_indexed(std::string_view type, std::size_t index) const;
};

/// Address into the store. With neither `section_name` nor `index` the path
/// names every section of `section_type`; reads then require that exactly one
/// such section exists.
struct Path {
  std::string package;
  std::string section_type;
  std::optional<std::string> section_name;
  std::optional<std::size_t> index;
  std::optional<std::string> option;

  bool operator==(const Path&) const = default;

  Path with_option(std::string name) const {
    Path p = *this;
    p.option = std::move(name);
    return p;
  }
  /// "example/@interfaces[0]/name", "example/device/name", "example/@logging".
  std::string str() const;
};

enum class FlatKind { option, list, container };

/// One (path, kind, value) triple of a flattened request body. `label` is the
/// dotted trail accumulated while walking the schema
/// ("example.device.@interfaces[0].name").
struct FlattenedEntry {
  Path path;
  FlatKind kind = FlatKind::option;
  std::optional<std::string> value;
  std::string label;

  bool operator==(const FlattenedEntry&) const = default;
};

std::string_view to_string(FlatKind kind);
/// `"example.device", container,` / `"example.device.name", option, "Router_0"`.
std::string to_string(const FlattenedEntry& entry);

bool is_identifier(std::string_view s);
bool is_type_name(std::string_view s);
/// Values must be non-empty, single-line and free of single quotes.
bool is_storable_value(std::string_view s);

/// Parses UCI text. Comment lines are dropped; values may be single-, double-
/// or un-quoted. Throws SyntaxError.
Document parse(std::string_view text, std::string package = {});

/// Canonical text: `config <type> '<name>'`, tab-indented single-quoted
/// options and lists, a blank line after every section.
std::string serialize(const Document& doc);

using Value = std::variant<std::string, std::vector<std::string>>;

/// nullopt when the section or entry does not exist. Throws AmbiguousPath.
std::optional<Value> read_value(const Document& doc, const Path& path);

enum class ApplyMode { create, replace };

struct CommitReport {
  std::size_t sections_created = 0;
  std::size_t options_written = 0;
  std::size_t list_values_written = 0;
  std::vector<std::string> packages;  // packages rewritten, in first-touch order

  bool empty() const { return packages.empty(); }
};

/// What to clear before a replace-mode write.
struct ClearOp {
  enum class Kind {
    entry,        // remove the option/list named by path.option
    all_of_type,  // remove every section of path.section_type
  };
  Kind kind = Kind::entry;
  Path path;
};

class Store;

/// Request-scoped read cache over a Store: every package file is read and
/// parsed at most once.
class Snapshot {
 public:
  explicit Snapshot(const Store& store) : store_(&store) {}

  const Document& document(const std::string& package) const;
  std::size_t count_sections(const std::string& package, std::string_view type) const;
  std::optional<Value> read_value(const Path& path) const;

 private:
  const Store* store_;
  mutable std::map<std::string, Document> cache_;
};

class Store {
 public:
  explicit Store(std::filesystem::path root,
                 std::chrono::milliseconds lock_timeout = std::chrono::seconds(5));

  const std::filesystem::path& root() const { return root_; }
  std::chrono::milliseconds lock_timeout() const { return lock_timeout_; }
  void set_lock_timeout(std::chrono::milliseconds t) { lock_timeout_ = t; }

  /// Missing package files load as an empty document.
  Document load(const std::string& package) const;
  /// Rewrites the package file atomically (temp file then rename).
  void commit(const Document& doc) const;

  std::size_t count_sections(const std::string& package, std::string_view type) const;
  std::optional<Value> read_value(const Path& path) const;

  /// Applies entries in order. In replace mode `clear` runs first, in the same
  /// commit. Throws ConflictError (create mode), UnsupportedValue, StoreIoError.
  CommitReport apply_changes(std::span<const FlattenedEntry> entries, ApplyMode mode,
                             std::span<const ClearOp> clear = {}) const;

  /// Removes an option/list, a section, or every section of a type.
  /// Throws NotFound when nothing matches.
  std::size_t delete_at(const Path& path) const;

  /// Runs `action` while holding the store-wide advisory lock file.
  /// Throws LockTimeout if the lock is not acquired within lock_timeout().
  template <class F>
  auto with_writer_lock(F&& action) const {
    LockGuard guard(*this);
    return std::forward<F>(action)();
  }

  Snapshot snapshot() const { return Snapshot(*this); }

  /// Called after the temp file is written and before it is renamed into
  /// place. Tests use it to inject faults.
  std::function<void(const std::filesystem::path&)> before_rename;

 private:
  class LockGuard {
   public:
    explicit LockGuard(const Store& store);
    ~LockGuard();
    LockGuard(const LockGuard&) = delete;
    LockGuard& operator=(const LockGuard&) = delete;

   private:
    int fd_ = -1;
  };

  std::filesystem::path package_file(const std::string& package) const;

  std::filesystem::path root_;
  std::chrono::milliseconds lock_timeout_;
};

}  // namespace orc::uci
