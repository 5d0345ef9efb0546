#include "orc/uci.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "orc/error.hpp"

namespace orc::uci {

namespace {

bool is_ident_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

struct Token {
  std::string text;
};

// Splits one line into whitespace-separated tokens. A token may be built from
// several adjacent segments: '...' (literal), "..." (backslash escapes) and
// bare characters (backslash escapes). An unquoted '#' at a token boundary
// starts a trailing comment.
std::vector<Token> tokenize(std::string_view line, std::size_t lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = line.size();
  while (i < n) {
    while (i < n && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= n || line[i] == '#') break;
    Token tok;
    while (i < n && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') {
      const char c = line[i];
      if (c == '\'') {
        const auto end = line.find('\'', i + 1);
        if (end == std::string_view::npos) throw SyntaxError(lineno, "unterminated quote");
        tok.text.append(line.substr(i + 1, end - i - 1));
        i = end + 1;
      } else if (c == '"') {
        ++i;
        bool closed = false;
        while (i < n) {
          if (line[i] == '\\' && i + 1 < n) {
            tok.text.push_back(line[i + 1]);
            i += 2;
          } else if (line[i] == '"') {
            closed = true;
            ++i;
            break;
          } else {
            tok.text.push_back(line[i++]);
          }
        }
        if (!closed) throw SyntaxError(lineno, "unterminated quote");
      } else if (c == '\\') {
        if (i + 1 >= n) throw SyntaxError(lineno, "dangling escape");
        tok.text.push_back(line[i + 1]);
        i += 2;
      } else {
        tok.text.push_back(c);
        ++i;
      }
    }
    out.push_back(std::move(tok));
  }
  return out;
}

std::string quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  out.push_back('\'');
  return out;
}

template <class Doc>
auto* resolve_section(Doc& doc, const Path& path) {
  if (path.section_name) return doc.find_named(path.section_type, *path.section_name);
  if (path.index) return doc.find_indexed(path.section_type, *path.index);
  const auto n = doc.count(path.section_type);
  if (n > 1) throw AmbiguousPath(path.str() + " matches " + std::to_string(n) + " sections");
  return n == 1 ? doc.find_indexed(path.section_type, 0) : nullptr;
}

void remove_entries(Section& s, std::string_view name) {
  std::erase_if(s.entries, [&](const Entry& e) { return e.name == name; });
}

void check_writable(const Path& path) {
  if (!is_type_name(path.package)) throw UnsupportedValue("invalid package name '" + path.package + "'");
  if (!is_type_name(path.section_type))
    throw UnsupportedValue("invalid section type '" + path.section_type + "'");
  if (path.section_name && !is_identifier(*path.section_name))
    throw UnsupportedValue("invalid section name '" + *path.section_name + "'");
  if (path.option && !is_identifier(*path.option))
    throw UnsupportedValue("invalid option name '" + *path.option + "'");
}

// Finds or creates the section a write addresses.
Section& ensure_section(Document& doc, const Path& path, CommitReport& report) {
  if (path.section_name) {
    if (auto* s = doc.find_named(path.section_type, *path.section_name)) return *s;
  } else if (path.index) {
    const auto n = doc.count(path.section_type);
    if (*path.index < n) return *doc.find_indexed(path.section_type, *path.index);
    if (*path.index > n)
      throw NotFound(path.str() + ": index beyond the next free position " + std::to_string(n));
  } else if (auto* s = resolve_section(doc, path)) {
    return *s;
  }
  doc.sections.push_back(Section{path.section_type, path.section_name, {}});
  ++report.sections_created;
  return doc.sections.back();
}

}  // namespace

const Entry* Section::find_option(std::string_view option) const {
  for (const auto& e : entries)
    if (e.kind == EntryKind::option && e.name == option) return &e;
  return nullptr;
}

std::vector<std::string> Section::list_values(std::string_view list) const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (e.kind == EntryKind::list && e.name == list) out.push_back(e.value);
  return out;
}

bool Section::has_entry(std::string_view name) const {
  return std::any_of(entries.begin(), entries.end(), [&](const Entry& e) { return e.name == name; });
}

std::size_t Document::count(std::string_view type) const {
  return static_cast<std::size_t>(
      std::count_if(sections.begin(), sections.end(), [&](const Section& s) { return s.type == type; }));
}

Section* Document::find_named(std::string_view type, std::string_view name) {
  return const_cast<Section*>(std::as_const(*this).find_named(type, name));
}

const Section* Document::find_named(std::string_view type, std::string_view name) const {
  for (const auto& s : sections)
    if (s.type == type && s.name && *s.name == name) return &s;
  return nullptr;
}

Section* Document::find_indexed(std::string_view type, std::size_t index) {
  return const_cast<Section*>(std::as_const(*this).find_indexed(type, index));
}

const Section* Document::find_indexed(std::string_view type, std::size_t index) const {
  for (const auto& s : sections) {
    if (s.type != type) continue;
    if (index == 0) return &s;
    --index;
  }
  return nullptr;
}

std::string Path::str() const {
  std::string out = package + "/";
  if (section_name) {
    out += *section_name;
  } else {
    out += "@" + section_type;
    if (index) out += "[" + std::to_string(*index) + "]";
  }
  if (option) out += "/" + *option;
  return out;
}

std::string_view to_string(FlatKind kind) {
  switch (kind) {
    case FlatKind::option: return "option";
    case FlatKind::list: return "list";
    case FlatKind::container: return "container";
  }
  return "?";
}

std::string to_string(const FlattenedEntry& entry) {
  std::string out = "\"" + entry.label + "\", " + std::string(to_string(entry.kind)) + ",";
  if (entry.value) out += " \"" + *entry.value + "\"";
  return out;
}

bool is_identifier(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), is_ident_char);
}

bool is_type_name(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return is_ident_char(c) || c == '-'; });
}

bool is_storable_value(std::string_view s) {
  return !s.empty() && s.find_first_of("'\n\r") == std::string_view::npos;
}

Document parse(std::string_view text, std::string package) {
  Document doc{std::move(package), {}};
  Section* current = nullptr;
  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const auto line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;

    const auto tokens = tokenize(line, lineno);
    if (tokens.empty()) continue;
    const auto& keyword = tokens[0].text;

    if (keyword == "config") {
      if (tokens.size() < 2) throw SyntaxError(lineno, "missing section type");
      if (tokens.size() > 3) throw SyntaxError(lineno, "unexpected token '" + tokens[3].text + "'");
      if (!is_type_name(tokens[1].text))
        throw SyntaxError(lineno, "invalid section type '" + tokens[1].text + "'");
      Section s{tokens[1].text, std::nullopt, {}};
      if (tokens.size() == 3) {
        if (!is_identifier(tokens[2].text))
          throw SyntaxError(lineno, "invalid section name '" + tokens[2].text + "'");
        if (doc.find_named(s.type, tokens[2].text))
          throw SyntaxError(lineno, "duplicate section '" + tokens[2].text + "'");
        s.name = tokens[2].text;
      }
      doc.sections.push_back(std::move(s));
      current = &doc.sections.back();
    } else if (keyword == "option" || keyword == "list") {
      if (!current) throw SyntaxError(lineno, keyword + " outside of a section");
      if (tokens.size() < 2) throw SyntaxError(lineno, "missing name");
      if (tokens.size() < 3 || tokens[2].text.empty()) throw SyntaxError(lineno, "missing value");
      if (tokens.size() > 3) throw SyntaxError(lineno, "unexpected token '" + tokens[3].text + "'");
      const auto& name = tokens[1].text;
      if (!is_identifier(name)) throw SyntaxError(lineno, "invalid identifier '" + name + "'");
      const auto kind = keyword == "option" ? EntryKind::option : EntryKind::list;
      auto existing = std::find_if(current->entries.begin(), current->entries.end(),
                                   [&](const Entry& e) { return e.name == name; });
      if (existing != current->entries.end() && existing->kind != kind)
        throw SyntaxError(lineno, "'" + name + "' used as both option and list");
      if (kind == EntryKind::option && existing != current->entries.end()) {
        existing->value = tokens[2].text;  // last assignment wins, as in libuci
      } else {
        current->entries.push_back(Entry{kind, name, tokens[2].text});
      }
    } else {
      throw SyntaxError(lineno, "unknown keyword '" + keyword + "'");
    }
  }
  return doc;
}

std::string serialize(const Document& doc) {
  std::string out;
  for (const auto& s : doc.sections) {
    out += "config " + s.type;
    if (s.name) out += " " + quote(*s.name);
    out += "\n";
    for (const auto& e : s.entries) {
      out += e.kind == EntryKind::option ? "\toption " : "\tlist ";
      out += e.name + " " + quote(e.value) + "\n";
    }
    out += "\n";
  }
  return out;
}

std::optional<Value> read_value(const Document& doc, const Path& path) {
  if (!path.option) throw std::invalid_argument("read_value: path has no option: " + path.str());
  const Section* s = resolve_section(doc, path);
  if (!s) return std::nullopt;
  if (const Entry* e = s->find_option(*path.option)) return Value{e->value};
  auto values = s->list_values(*path.option);
  if (values.empty()) return std::nullopt;
  return Value{std::move(values)};
}

// ---------------------------------------------------------------------------

const Document& Snapshot::document(const std::string& package) const {
  auto it = cache_.find(package);
  if (it == cache_.end()) it = cache_.emplace(package, store_->load(package)).first;
  return it->second;
}

std::size_t Snapshot::count_sections(const std::string& package, std::string_view type) const {
  return document(package).count(type);
}

std::optional<Value> Snapshot::read_value(const Path& path) const {
  return uci::read_value(document(path.package), path);
}

Store::Store(std::filesystem::path root, std::chrono::milliseconds lock_timeout)
    : root_(std::move(root)), lock_timeout_(lock_timeout) {}

std::filesystem::path Store::package_file(const std::string& package) const {
  if (!is_type_name(package)) throw StoreIoError("invalid package name '" + package + "'");
  return root_ / package;
}

Document Store::load(const std::string& package) const {
  const auto file = package_file(package);
  std::error_code ec;
  if (!std::filesystem::exists(file, ec)) {
    if (ec) throw StoreIoError("cannot stat " + file.string() + ": " + ec.message());
    return Document{package, {}};
  }
  std::ifstream in(file, std::ios::binary);
  if (!in) throw StoreIoError("cannot open " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw StoreIoError("cannot read " + file.string());
  try {
    return parse(buf.str(), package);
  } catch (const SyntaxError& e) {
    throw StoreIoError("package '" + package + "' is corrupt: " + e.what());
  }
}

void Store::commit(const Document& doc) const {
  const auto file = package_file(doc.package);
  std::error_code ec;
  std::filesystem::create_directories(root_, ec);
  if (ec) throw StoreIoError("cannot create " + root_.string() + ": " + ec.message());

  const auto tmp = root_ / ("." + doc.package + ".tmp." + std::to_string(::getpid()));
  const auto text = serialize(doc);
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw StoreIoError("cannot create " + tmp.string() + ": " + std::strerror(errno));

  struct TmpGuard {
    const std::filesystem::path& path;
    bool armed = true;
    ~TmpGuard() {
      if (armed) ::unlink(path.c_str());
    }
  } guard{tmp};

  std::size_t written = 0;
  while (written < text.size()) {
    const auto r = ::write(fd, text.data() + written, text.size() - written);
    if (r < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw StoreIoError("cannot write " + tmp.string() + ": " + std::strerror(err));
    }
    written += static_cast<std::size_t>(r);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0)
    throw StoreIoError("cannot flush " + tmp.string() + ": " + std::strerror(errno));

  if (before_rename) before_rename(tmp);

  if (::rename(tmp.c_str(), file.c_str()) != 0)
    throw StoreIoError("cannot rename into " + file.string() + ": " + std::strerror(errno));
  guard.armed = false;
}

std::size_t Store::count_sections(const std::string& package, std::string_view type) const {
  return load(package).count(type);
}

std::optional<Value> Store::read_value(const Path& path) const {
  return uci::read_value(load(path.package), path);
}

CommitReport Store::apply_changes(std::span<const FlattenedEntry> entries, ApplyMode mode,
                                  std::span<const ClearOp> clear) const {
  CommitReport report;
  std::map<std::string, Document> docs;
  std::map<std::string, Document> originals;
  std::vector<std::string> order;

  auto doc_for = [&](const std::string& package) -> Document& {
    auto it = docs.find(package);
    if (it == docs.end()) {
      it = docs.emplace(package, load(package)).first;
      originals.emplace(package, it->second);
      order.push_back(package);
    }
    return it->second;
  };

  if (mode == ApplyMode::replace) {
    for (const auto& op : clear) {
      auto& doc = doc_for(op.path.package);
      switch (op.kind) {
        case ClearOp::Kind::entry:
          if (auto* s = resolve_section(doc, op.path); s && op.path.option) remove_entries(*s, *op.path.option);
          break;
        case ClearOp::Kind::all_of_type:
          std::erase_if(doc.sections, [&](const Section& s) { return s.type == op.path.section_type; });
          break;
      }
    }
  }

  for (const auto& entry : entries) {
    if (entry.path.section_type.empty()) continue;  // no UCI representation
    check_writable(entry.path);
    auto& doc = doc_for(entry.path.package);
    const Section* before = mode == ApplyMode::create ? resolve_section(originals.at(entry.path.package), entry.path)
                                                      : nullptr;
    switch (entry.kind) {
      case FlatKind::container:
        if (before) throw ConflictError("section " + entry.path.str() + " already exists");
        ensure_section(doc, entry.path, report);
        break;
      case FlatKind::option:
      case FlatKind::list: {
        if (!entry.path.option) throw std::invalid_argument("entry without option: " + entry.path.str());
        if (!entry.value || !is_storable_value(*entry.value))
          throw UnsupportedValue("value for " + entry.path.str() + " cannot be stored in UCI");
        const auto& name = *entry.path.option;
        if (before && before->has_entry(name)) throw ConflictError(entry.path.str() + " already exists");
        auto& section = ensure_section(doc, entry.path, report);
        if (entry.kind == FlatKind::option) {
          remove_entries(section, name);
          section.entries.push_back(Entry{EntryKind::option, name, *entry.value});
          ++report.options_written;
        } else {
          std::erase_if(section.entries,
                        [&](const Entry& e) { return e.name == name && e.kind == EntryKind::option; });
          section.entries.push_back(Entry{EntryKind::list, name, *entry.value});
          ++report.list_values_written;
        }
        break;
      }
    }
  }

  for (const auto& package : order) {
    const auto& doc = docs.at(package);
    if (doc == originals.at(package)) continue;
    commit(doc);
    report.packages.push_back(package);
  }
  return report;
}

std::size_t Store::delete_at(const Path& path) const {
  auto doc = load(path.package);
  std::size_t removed = 0;
  if (path.option) {
    if (auto* s = resolve_section(doc, path)) {
      const auto before = s->entries.size();
      remove_entries(*s, *path.option);
      removed = before - s->entries.size();
    }
  } else if (path.section_name || path.index) {
    if (const auto* s = resolve_section(doc, path)) {
      doc.sections.erase(doc.sections.begin() + (s - doc.sections.data()));
      removed = 1;
    }
  } else {
    const auto before = doc.sections.size();
    std::erase_if(doc.sections, [&](const Section& s) { return s.type == path.section_type; });
    removed = before - doc.sections.size();
  }
  if (removed == 0) throw NotFound("nothing at " + path.str());
  commit(doc);
  return removed;
}

Store::LockGuard::LockGuard(const Store& store) {
  std::error_code ec;
  std::filesystem::create_directories(store.root_, ec);
  const auto file = store.root_ / ".lock";
  fd_ = ::open(file.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
  if (fd_ < 0) throw StoreIoError("cannot open lock file " + file.string() + ": " + std::strerror(errno));
  const auto deadline = std::chrono::steady_clock::now() + store.lock_timeout_;
  while (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
    if (errno != EWOULDBLOCK && errno != EINTR) {
      const int err = errno;
      ::close(fd_);
      throw StoreIoError(std::string("cannot lock store: ") + std::strerror(err));
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      ::close(fd_);
      throw LockTimeout("store " + store.root_.string() + " is locked by another writer");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

Store::LockGuard::~LockGuard() {
  ::flock(fd_, LOCK_UN);
  ::close(fd_);
}

}  // namespace orc::uci
