#include "orc/restconf.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "orc/datamap.hpp"
#include "orc/error.hpp"
#include "orc/validate.hpp"

namespace orc::restconf {

using datamap::ResolvedTarget;
using datamap::WriteMode;
using yang::NodeKind;

namespace {

constexpr std::string_view kRoots[] = {"/restconf/data", "/data"};

struct Failure {
  Response response;
};

[[noreturn]] void fail(int status, const std::string& tag, const std::string& path, const std::string& message) {
  throw Failure{error_response(status, tag, path, message)};
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

std::string media_type(const std::string& content_type) {
  auto t = content_type.substr(0, content_type.find(';'));
  const auto b = t.find_first_not_of(" \t");
  const auto e = t.find_last_not_of(" \t");
  return b == std::string::npos ? "" : lower(t.substr(b, e - b + 1));
}

std::string percent_encode(const std::string& s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out += '%';
      out += kHex[c >> 4];
      out += kHex[c & 15];
    }
  }
  return out;
}

std::string resource_uri(const Request& r) {
  std::string out = r.data_root;
  for (const auto& s : r.path) out += "/" + s;
  return out;
}

enum Method : unsigned { kGet = 1, kHead = 2, kOptions = 4, kPost = 8, kPut = 16, kDelete = 32 };

unsigned allowed(const ResolvedTarget& t) {
  const unsigned read = kGet | kHead | kOptions;
  if (t.is_root() || t.is_module_root()) return read | kPost;
  if (t.list_entry) return read | kPost | kPut | kDelete;
  switch (t.node->kind) {
    case NodeKind::list: return read | kPost | kDelete;
    case NodeKind::leaf:
    case NodeKind::leaf_list: return read | kPut | kDelete;
    default: return read | kPost | kPut | kDelete;
  }
}

std::string allow_header(unsigned mask) {
  static const std::pair<unsigned, const char*> kNames[] = {{kGet, "GET"},   {kHead, "HEAD"}, {kOptions, "OPTIONS"},
                                                             {kPost, "POST"}, {kPut, "PUT"},   {kDelete, "DELETE"}};
  std::string out;
  for (const auto& [bit, name] : kNames)
    if (mask & bit) out += (out.empty() ? "" : ", ") + std::string(name);
  return out;
}

unsigned method_bit(const std::string& m) {
  if (m == "GET") return kGet;
  if (m == "HEAD") return kHead;
  if (m == "OPTIONS") return kOptions;
  if (m == "POST") return kPost;
  if (m == "PUT") return kPut;
  if (m == "DELETE") return kDelete;
  return 0;
}

Response json_response(int status, Json body) {
  Response r;
  r.status = status;
  r.headers.emplace_back("Content-Type", std::string(kMediaType));
  r.body = std::move(body);
  return r;
}

Response no_content(int status) {
  Response r;
  r.status = status;
  return r;
}

Response validation_failure(const std::vector<validate::ValidationError>& errors) {
  const bool conflict = std::all_of(errors.begin(), errors.end(),
                                    [](const auto& e) { return e.rule == validate::Rule::exists_conflict; });
  Json list = Json::array();
  for (const auto& e : errors) list.push_back(validate::to_json(e));
  const auto& first = errors.front();
  return error_response(conflict ? 409 : 400, std::string(validate::to_string(first.rule)), first.json_path,
                        first.detail, std::move(list));
}

std::string top_key(const yang::Module& m, const yang::Node& n) { return m.name + ":" + n.name; }

class Handler {
 public:
  Handler(const yang::ModelSet& models, const uci::Store& store, const Request& req)
      : models_(models), store_(store), req_(req), uri_(resource_uri(req)) {}

  Response run() {
    const unsigned bit = method_bit(req_.method);
    auto snapshot = store_.snapshot();
    const auto target = locate(snapshot, {.allow_new_entry = bit == kPut});
    const unsigned mask = allowed(target);
    if (!(bit & mask)) {
      auto r = error_response(405, "operation-not-supported", uri_,
                              "method " + req_.method + " is not allowed on this resource");
      r.headers.emplace_back("Allow", allow_header(mask));
      return r;
    }
    switch (bit) {
      case kGet: return get(target, snapshot);
      case kHead: {
        auto r = get(target, snapshot);
        r.body.reset();
        return r;
      }
      case kOptions: {
        auto r = no_content(200);
        r.headers.emplace_back("Allow", allow_header(mask));
        return r;
      }
      case kPost: return post();
      case kPut: return put();
      case kDelete: return del();
    }
    fail(405, "operation-not-supported", uri_, "unsupported method");
  }

 private:
  ResolvedTarget locate(const uci::Snapshot& snapshot, datamap::LocateOptions options = {}) const {
    return datamap::locate(models_, req_.path, snapshot, options);
  }

  Response get(const ResolvedTarget& target, const uci::Snapshot& snapshot) const {
    Json body = Json::object();
    if (target.is_root()) {
      for (const auto& m : models_) {
        for (const auto& c : m.root.children) {
          ResolvedTarget t;
          t.module = &m;
          t.node = &c;
          t.ctx = datamap::module_context(m);
          t.ctx.enter(c);
          if (!datamap::target_exists(t, snapshot)) continue;
          if (auto v = datamap::uci_to_json(t, snapshot)) body[top_key(m, c)] = std::move(*v);
        }
      }
      return json_response(200, std::move(body));
    }
    auto value = datamap::uci_to_json(target, snapshot);
    if (!value || (target.node->kind == NodeKind::list && value->empty()))
      fail(404, "not-found", uri_, "no data stored for this resource");
    body[top_key(*target.module, *target.node)] = std::move(*value);
    return json_response(200, std::move(body));
  }

  Json parse_body() const {
    if (!req_.body || req_.body->empty()) fail(400, "malformed-message", uri_, "request body is required");
    const auto type = media_type(req_.content_type);
    if (type != kMediaType && type != "application/json")
      fail(415, "unsupported-media-type", uri_,
           "content type '" + req_.content_type + "' is not application/yang-data+json");
    try {
      return Json::parse(*req_.body);
    } catch (const Json::parse_error& e) {
      fail(400, "malformed-message", uri_, std::string("invalid JSON: ") + e.what());
    }
  }

  // URI of the resource a POST created.
  std::string created_location(const ResolvedTarget& target, const Json& body) const {
    const auto subjects = datamap::body_subjects(models_, target, body);
    if (subjects.empty()) return uri_;
    const auto& s = subjects.front();
    std::string base = uri_;
    if (!s.is_target) base += "/" + (target.is_root() ? top_key(*s.module, *s.node) : s.node->name);
    if (s.node->kind != NodeKind::list || !s.value->is_array() || s.value->empty()) return base;
    const auto& item = s.value->back();
    std::string keys;
    for (const auto& k : s.node->keys) {
      const Json* v = item.contains(k) ? &item[k] : nullptr;
      if (!v && item.contains(s.module->name + ":" + k)) v = &item[s.module->name + ":" + k];
      if (!v) return base;
      keys += (keys.empty() ? "" : ",") + percent_encode(datamap::encode_value(*v));
    }
    return base + "=" + keys;
  }

  Response post() const {
    const Json body = parse_body();
    return store_.with_writer_lock([&] {
      auto snapshot = store_.snapshot();
      const auto target = locate(snapshot);
      const auto errors = validate::verify_tree(models_, target, body, snapshot, WriteMode::create);
      if (!errors.empty()) return validation_failure(errors);
      const auto entries = datamap::json_to_entries(models_, target, body, WriteMode::create, snapshot);
      store_.apply_changes(entries, uci::ApplyMode::create);
      auto r = no_content(201);
      r.headers.emplace_back("Location", created_location(target, body));
      return r;
    });
  }

  Response put() const {
    const Json body = parse_body();
    return store_.with_writer_lock([&] {
      auto snapshot = store_.snapshot();
      const auto target = locate(snapshot, {.allow_new_entry = true});
      if (body.is_object()) {
        for (const auto& [key, value] : body.items()) {
          const auto colon = key.find(':');
          const auto name = colon == std::string::npos ? key : key.substr(colon + 1);
          const auto prefix = colon == std::string::npos ? "" : key.substr(0, colon);
          if (name != target.node->name || (!prefix.empty() && prefix != target.module->name)) {
            validate::ValidationError e{"/" + key, validate::Rule::unknown_node,
                                        "PUT body must name the target resource '" + target.node->name + "'"};
            return validation_failure({e});
          }
        }
      }
      const bool exists = datamap::target_exists(target, snapshot);
      const auto mode = exists ? WriteMode::replace : WriteMode::create;
      const auto errors = validate::verify_tree(models_, target, body, snapshot, mode);
      if (!errors.empty()) return validation_failure(errors);
      const auto entries = datamap::json_to_entries(models_, target, body, mode, snapshot);
      if (exists) {
        const auto clear = datamap::replace_scope(target);
        store_.apply_changes(entries, uci::ApplyMode::replace, clear);
        return no_content(204);
      }
      store_.apply_changes(entries, uci::ApplyMode::create);
      auto r = no_content(201);
      r.headers.emplace_back("Location", uri_);
      return r;
    });
  }

  Response del() const {
    return store_.with_writer_lock([&] {
      auto snapshot = store_.snapshot();
      const auto target = locate(snapshot);
      if (!datamap::target_exists(target, snapshot)) fail(404, "not-found", uri_, "no data stored for this resource");
      if (const auto path = datamap::resolve_delete(target)) {
        store_.delete_at(*path);
      } else {
        const auto clear = datamap::replace_scope(target);
        store_.apply_changes({}, uci::ApplyMode::replace, clear);
      }
      return no_content(204);
    });
  }

  const yang::ModelSet& models_;
  const uci::Store& store_;
  const Request& req_;
  std::string uri_;
};

int status_for(const Error& e) {
  if (dynamic_cast<const UnknownModule*>(&e) || dynamic_cast<const UnknownNode*>(&e) ||
      dynamic_cast<const UnknownListEntry*>(&e) || dynamic_cast<const NotFound*>(&e))
    return 404;
  if (dynamic_cast<const ConflictError*>(&e)) return 409;
  if (dynamic_cast<const MissingKey*>(&e) || dynamic_cast<const RootMismatch*>(&e) ||
      dynamic_cast<const ShapeError*>(&e) || dynamic_cast<const UnsupportedValue*>(&e))
    return 400;
  return 500;
}

}  // namespace

std::optional<std::string> Response::header(std::string_view name) const {
  for (const auto& [k, v] : headers)
    if (lower(k) == lower(std::string(name))) return v;
  return std::nullopt;
}

std::string Response::body_text() const { return body ? body->dump(2) + "\n" : std::string(); }

std::optional<SplitUri> split_uri(std::string_view uri) {
  uri = uri.substr(0, uri.find('?'));
  for (const auto root : kRoots) {
    if (!uri.starts_with(root)) continue;
    auto rest = uri.substr(root.size());
    if (!rest.empty() && rest.front() != '/') continue;
    SplitUri out{std::string(root), {}};
    while (!rest.empty()) {
      rest.remove_prefix(1);
      const auto slash = rest.find('/');
      const auto seg = rest.substr(0, slash);
      if (!seg.empty()) out.segments.emplace_back(seg);
      rest = slash == std::string_view::npos ? std::string_view() : rest.substr(slash);
    }
    return out;
  }
  return std::nullopt;
}

std::string_view reason_phrase(int status) {
  switch (status) {
    case 200: return "OK";
    case 201: return "Created";
    case 204: return "No Content";
    case 400: return "Bad Request";
    case 404: return "Not Found";
    case 405: return "Method Not Allowed";
    case 409: return "Conflict";
    case 415: return "Unsupported Media Type";
    case 500: return "Internal Server Error";
    default: return "Unknown";
  }
}

Response error_response(int status, const std::string& tag, const std::string& path, const std::string& message,
                        Json errors) {
  return json_response(status, Json{{"error", Json{{"tag", tag}, {"path", path}, {"message", message},
                                                   {"errors", std::move(errors)}}}});
}

Response handle(const yang::ModelSet& models, const uci::Store& store, const Request& request) {
  const auto uri = resource_uri(request);
  try {
    return Handler(models, store, request).run();
  } catch (const Failure& f) {
    return f.response;
  } catch (const Error& e) {
    return error_response(status_for(e), e.code(), uri, e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal-error", uri, e.what());
  }
}

Response serve(const yang::ModelSet& models, const uci::Store& store, const std::string& method,
               std::string_view uri, std::optional<std::string> body, const std::string& content_type) {
  auto split = split_uri(uri);
  if (!split) {
    return error_response(404, "invalid-uri", std::string(uri.substr(0, uri.find('?'))),
                          "resources live under /restconf/data");
  }
  Request req{method, std::move(split->segments), std::move(body), content_type, std::move(split->data_root)};
  return handle(models, store, req);
}

yang::ModelSet load_models(const std::filesystem::path& dir) {
  std::error_code ec;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir, ec))
    if (e.path().extension() == ".json") files.push_back(e.path());
  if (ec) throw StoreIoError("cannot read model directory " + dir.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  yang::ModelSet out;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw StoreIoError("cannot read " + f.string());
    std::stringstream text;
    text << in.rdbuf();
    auto m = yang::load_jin(text.str());
    if (m.name.empty()) {
      m.name = f.stem().string();
      m.root.name = m.name;
    }
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace orc::restconf
