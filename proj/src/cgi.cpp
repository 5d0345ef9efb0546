#include <charconv>
#include <istream>
#include <ostream>

#include "orc/error.hpp"
#include "orc/restconf.hpp"

namespace orc::restconf {

namespace {

const std::string* lookup(const std::map<std::string, std::string>& env, const std::string& key) {
  const auto it = env.find(key);
  return it == env.end() ? nullptr : &it->second;
}

bool write_response(std::ostream& out, const Response& r) {
  out << "Status: " << r.status << ' ' << reason_phrase(r.status) << "\r\n";
  for (const auto& [name, value] : r.headers) out << name << ": " << value << "\r\n";
  out << "\r\n" << r.body_text();
  out.flush();
  return static_cast<bool>(out);
}

}  // namespace

int run_cgi(const std::map<std::string, std::string>& env, std::istream& in, std::ostream& out,
            const Config& config) {
  const auto* method = lookup(env, "REQUEST_METHOD");
  const auto* path_info = lookup(env, "PATH_INFO");
  if (!method || method->empty() || !path_info) {
    write_response(out, error_response(500, "internal-error", path_info ? *path_info : "",
                                       "CGI environment lacks REQUEST_METHOD or PATH_INFO"));
    return 1;
  }

  std::optional<std::string> body;
  if (const auto* length_text = lookup(env, "CONTENT_LENGTH"); length_text && !length_text->empty()) {
    std::size_t length = 0;
    const auto [p, ec] = std::from_chars(length_text->data(), length_text->data() + length_text->size(), length);
    if (ec != std::errc() || p != length_text->data() + length_text->size()) {
      return write_response(out, error_response(400, "malformed-message", *path_info, "invalid CONTENT_LENGTH"))
                 ? 0
                 : 1;
    }
    std::string data(length, '\0');
    in.read(data.data(), static_cast<std::streamsize>(length));
    if (static_cast<std::size_t>(in.gcount()) != length) {
      return write_response(out, error_response(400, "malformed-message", *path_info,
                                                "request body is shorter than CONTENT_LENGTH"))
                 ? 0
                 : 1;
    }
    if (length > 0) body = std::move(data);
  }
  const auto* content_type = lookup(env, "CONTENT_TYPE");

  Response response;
  try {
    const auto models = load_models(config.models_dir);
    const uci::Store store(config.store_dir, config.lock_timeout);
    response = serve(models, store, *method, *path_info, std::move(body), content_type ? *content_type : "");
  } catch (const Error& e) {
    response = error_response(500, e.code(), *path_info, e.what());
  }
  return write_response(out, response) ? 0 : 1;
}

}  // namespace orc::restconf
