#pragma once

// Shared fixtures for the unit tests and the acceptance binary.

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "orc/json.hpp"
#include "orc/restconf.hpp"
#include "orc/uci.hpp"
#include "orc/yang.hpp"

namespace orc::test {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string read_file(const fs::path& p);
void write_file(const fs::path& p, const std::string& text);

/// FNV-1a over the names and contents of the package files in `dir`
/// (dot files excluded).
std::uint64_t dir_checksum(const fs::path& dir);

fs::path models_dir();
fs::path yang_dir();
fs::path fixtures_dir();
std::string orc_binary();
std::string yang2jin_binary();

/// The example module as the server loads it.
const yang::ModelSet& example_models();
/// Parses and resolves a YANG source (imports of the extension module only).
yang::Module compile_yang(const std::string& text);

/// The JSON request used throughout the worked example.
Json example_body();

/// Random schema-valid instance of the example module, keyed at the
/// datastore root ("example:device", optionally "example:logging").
Json random_instance(std::mt19937& rng);

/// Recursively sorts object keys so that key order does not matter.
Json normalized(const Json& j);

struct HttpResult {
  int status = 0;
  std::map<std::string, std::string> headers;  // lower-case names
  std::string body;
  double seconds = 0;
};

/// Runs the orc binary once in CGI mode.
struct CgiResult : HttpResult {
  int exit_code = -1;
  long max_rss_kib = 0;
};
CgiResult run_cgi_process(const fs::path& store, const std::string& method, const std::string& path_info,
                          const std::optional<std::string>& body = std::nullopt,
                          const std::string& content_type = "application/yang-data+json",
                          std::map<std::string, std::string> extra_env = {}, double lock_timeout = 5.0);

/// Parses CGI output ("Status: ..." header block, blank line, body).
HttpResult parse_cgi_output(const std::string& out);

/// In-process server on a free loopback port, running on its own thread.
class TestServer {
 public:
  explicit TestServer(const fs::path& store);
  ~TestServer();

  HttpResult request(const std::string& method, const std::string& path,
                     const std::optional<std::string>& body = std::nullopt,
                     const std::string& content_type = "application/yang-data+json");
  int port() const { return port_; }

 private:
  struct Impl;
  Impl* impl_;
  int port_ = -1;
};

/// In-process handle() with a fresh store view.
restconf::Response call(const uci::Store& store, const std::string& method, const std::string& uri,
                        const std::optional<Json>& body = std::nullopt);

}  // namespace orc::test
