#pragma once

// RESTCONF front end: method dispatch over the datamap/validate core, the CGI
// entry point and an embedded HTTP listener.

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "orc/json.hpp"
#include "orc/uci.hpp"
#include "orc/yang.hpp"

namespace orc::restconf {

inline constexpr std::string_view kMediaType = "application/yang-data+json";

struct Request {
  std::string method;
  // Segments below the data root, still percent-encoded; datamap decodes
  // names and keys once.
  std::vector<std::string> path;
  std::optional<std::string> body;
  std::string content_type;
  // Echoed into Location headers; "/restconf/data" or "/data".
  std::string data_root = "/restconf/data";
};

struct Response {
  int status = 200;
  std::vector<std::pair<std::string, std::string>> headers;
  std::optional<Json> body;

  std::optional<std::string> header(std::string_view name) const;
  /// Serialized body; empty when there is none.
  std::string body_text() const;
};

/// Splits "/restconf/data/a/b=c?x" into its data root and raw segments.
/// nullopt when the path is outside both data roots.
struct SplitUri {
  std::string data_root;
  std::vector<std::string> segments;
};
std::optional<SplitUri> split_uri(std::string_view uri);

std::string_view reason_phrase(int status);

/// Serves one request. Never throws.
Response handle(const yang::ModelSet& models, const uci::Store& store, const Request& request);

/// Splits `uri` (path plus optional query) and serves it; paths outside the
/// data roots get 404. Shared by every transport.
Response serve(const yang::ModelSet& models, const uci::Store& store, const std::string& method,
               std::string_view uri, std::optional<std::string> body, const std::string& content_type);

/// Response carrying the standard error body.
Response error_response(int status, const std::string& tag, const std::string& path, const std::string& message,
                        Json errors = Json::array());

/// Loads every *.json JIN file in `dir`, in file-name order. A module without
/// a "name" key is named after its file stem. Throws JinFormatError,
/// StoreIoError.
yang::ModelSet load_models(const std::filesystem::path& dir);

struct Config {
  std::filesystem::path models_dir;
  std::filesystem::path store_dir;
  std::chrono::milliseconds lock_timeout = std::chrono::seconds(5);
};

/// One CGI exchange. Returns the process exit code: 0 for every completed
/// HTTP exchange, 1 when the environment is unusable or output fails.
int run_cgi(const std::map<std::string, std::string>& env, std::istream& in, std::ostream& out,
            const Config& config);

/// Embedded HTTP/1.1 listener handling one request at a time, one request
/// per connection.
class Server {
 public:
  explicit Server(Config config);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds `host:port` (port 0 picks a free port) and returns the bound
  /// port, or -1 on failure.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Returns false if the loop could not start.
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// bind + listen. Returns a process exit code.
int run_server(const Config& config, const std::string& host, int port);

}  // namespace orc::restconf
