#include "support.hpp"

#include <httplib.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "orc/error.hpp"

namespace orc::test {

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "orc-test-XXXXXX").string();
  if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

std::uint64_t dir_checksum(const fs::path& dir) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (const auto& e : fs::directory_iterator(dir, ec))
    if (e.is_regular_file() && e.path().filename().string().front() != '.') files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = 1469598103934665603ULL;
  const auto mix = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  for (const auto& f : files) {
    mix(f.filename().string());
    mix(read_file(f));
  }
  return h;
}

fs::path models_dir() { return ORC_MODELS_DIR; }
fs::path yang_dir() { return ORC_YANG_DIR; }
fs::path fixtures_dir() { return ORC_FIXTURES_DIR; }
std::string orc_binary() { return ORC_BINARY; }
std::string yang2jin_binary() { return YANG2JIN_BINARY; }

const yang::ModelSet& example_models() {
  static const yang::ModelSet models = restconf::load_models(models_dir());
  return models;
}

yang::Module compile_yang(const std::string& text) {
  auto m = yang::parse_yang(text);
  yang::resolve_types(m, {});
  return m;
}

Json example_body() {
  return Json::parse(R"({
  "example:device": {
    "name": "Router_0",
    "interfaces": [{
      "name": "eth0",
      "enabled": true
    }],
    "applications": [
      "uhttpd",
      "luci"
     ]
  }
})");
}

namespace {

template <class T>
T pick(std::mt19937& rng, T lo, T hi) {
  return std::uniform_int_distribution<T>(lo, hi)(rng);
}

bool coin(std::mt19937& rng) { return pick(rng, 0, 1) == 1; }

std::string random_text(std::mt19937& rng, std::size_t min_len, std::size_t max_len) {
  static const std::string alphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 _-.:/#\"\\@$%&()[]{}";
  std::string s;
  const auto n = pick(rng, min_len, max_len);
  for (std::size_t i = 0; i < n; ++i) s += alphabet[pick<std::size_t>(rng, 0, alphabet.size() - 1)];
  return s;
}

std::string random_ident(std::mt19937& rng, const std::string& first, const std::string& rest, std::size_t max_len) {
  std::string s(1, first[pick<std::size_t>(rng, 0, first.size() - 1)]);
  const auto n = pick<std::size_t>(rng, 0, max_len - 1);
  for (std::size_t i = 0; i < n; ++i) s += rest[pick<std::size_t>(rng, 0, rest.size() - 1)];
  return s;
}

std::string random_mac(std::mt19937& rng) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (int i = 0; i < 6; ++i) {
    if (i) s += ':';
    s += hex[pick(rng, 0, 15)];
    s += hex[pick(rng, 0, 15)];
  }
  return s;
}

}  // namespace

Json random_instance(std::mt19937& rng) {
  static const std::string lower = "abcdefghijklmnopqrstuvwxyz";
  static const std::string alnum = "abcdefghijklmnopqrstuvwxyz0123456789";
  static const std::string ident = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_";

  Json device = Json::object();
  if (coin(rng)) device["name"] = random_text(rng, 1, 24);
  if (coin(rng)) device["enabled"] = coin(rng);
  if (coin(rng)) {
    Json items = Json::array();
    std::set<std::string> names, macs;
    const int n = pick(rng, 1, 4);
    for (int i = 0; i < n; ++i) {
      Json item = Json::object();
      std::string name;
      do name = random_ident(rng, lower, alnum, 15);
      while (!names.insert(name).second);
      item["name"] = name;
      item["enabled"] = coin(rng);
      if (coin(rng)) item["mtu"] = pick(rng, 68, 9000);
      if (coin(rng)) {
        std::string mac;
        do mac = random_mac(rng);
        while (!macs.insert(mac).second);
        item["mac"] = mac;
      }
      items.push_back(std::move(item));
    }
    device["interfaces"] = std::move(items);
  }
  if (coin(rng)) {
    Json apps = Json::array();
    std::set<std::string> seen;
    const int n = pick(rng, 1, 3);
    for (int i = 0; i < n; ++i) {
      auto a = random_text(rng, 1, 12);
      if (seen.insert(a).second) apps.push_back(a);
    }
    device["applications"] = std::move(apps);
  }
  if (coin(rng)) device["load"] = pick(rng, 0, 100);
  if (coin(rng)) device["serial"] = std::to_string(pick<long long>(rng, INT64_MIN, INT64_MAX));
  if (coin(rng)) {
    const long long micro = pick<long long>(rng, -180000000LL, 180000000LL);
    std::string s = micro < 0 ? "-" : "";
    const auto mag = micro < 0 ? -micro : micro;
    s += std::to_string(mag / 1000000);
    if (mag % 1000000) {
      auto frac = std::to_string(mag % 1000000);
      frac.insert(0, 6 - frac.size(), '0');
      while (frac.back() == '0') frac.pop_back();
      s += "." + frac;
    }
    device["location"] = s;
  }
  if (coin(rng)) {
    static const char* modes[] = {"router", "bridge", "access-point"};
    device["mode"] = modes[pick(rng, 0, 2)];
  }
  if (coin(rng)) {
    Json hosts = Json::array();
    std::set<std::string> seen;
    const int n = pick(rng, 1, 3);
    for (int i = 0; i < n; ++i) {
      std::string h;
      do h = random_ident(rng, ident, ident, 10);
      while (!seen.insert(h).second);
      Json item{{"hostname", h}};
      if (coin(rng)) item["ip"] = "10.0." + std::to_string(pick(rng, 0, 255)) + "." + std::to_string(pick(rng, 1, 254));
      if (coin(rng)) item["port"] = pick(rng, 0, 65535);
      hosts.push_back(std::move(item));
    }
    device["hosts"] = std::move(hosts);
  }

  Json out{{"example:device", std::move(device)}};
  if (coin(rng)) {
    Json logging = Json::object();
    static const char* levels[] = {"debug", "info", "warning", "error"};
    if (coin(rng)) logging["level"] = levels[pick(rng, 0, 3)];
    if (coin(rng)) logging["max-size"] = std::to_string(pick<unsigned long long>(rng, 0, UINT64_MAX));
    if (coin(rng)) logging["targets"] = Json::array({"/var/log/" + random_ident(rng, lower, alnum, 8)});
    out["example:logging"] = std::move(logging);
  }
  return out;
}

Json normalized(const Json& j) {
  if (j.is_object()) {
    std::map<std::string, Json> sorted;
    for (const auto& [k, v] : j.items()) sorted.emplace(k, normalized(v));
    Json out = Json::object();
    for (auto& [k, v] : sorted) out[k] = std::move(v);
    return out;
  }
  if (j.is_array()) {
    Json out = Json::array();
    for (const auto& v : j) out.push_back(normalized(v));
    return out;
  }
  return j;
}

HttpResult parse_cgi_output(const std::string& out) {
  HttpResult r;
  const auto end = out.find("\r\n\r\n");
  const std::string head = out.substr(0, end);
  r.body = end == std::string::npos ? "" : out.substr(end + 4);
  std::size_t pos = 0;
  while (pos < head.size()) {
    auto eol = head.find("\r\n", pos);
    if (eol == std::string::npos) eol = head.size();
    const auto line = head.substr(pos, eol - pos);
    pos = eol + 2;
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string name = line.substr(0, colon);
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    auto value = line.substr(colon + 1);
    value.erase(0, value.find_first_not_of(' '));
    if (name == "status") r.status = std::atoi(value.c_str());
    r.headers[name] = value;
  }
  return r;
}

CgiResult run_cgi_process(const fs::path& store, const std::string& method, const std::string& path_info,
                          const std::optional<std::string>& body, const std::string& content_type,
                          std::map<std::string, std::string> extra_env, double lock_timeout) {
  std::map<std::string, std::string> env{{"GATEWAY_INTERFACE", "CGI/1.1"},
                                         {"REQUEST_METHOD", method},
                                         {"PATH_INFO", path_info},
                                         {"QUERY_STRING", ""},
                                         {"SERVER_PROTOCOL", "HTTP/1.1"}};
  if (body) {
    env["CONTENT_LENGTH"] = std::to_string(body->size());
    env["CONTENT_TYPE"] = content_type;
  }
  for (auto& [k, v] : extra_env) env[k] = v;
  std::vector<std::string> env_strings;
  for (const auto& [k, v] : env)
    if (v != "\x01unset") env_strings.push_back(k + "=" + v);

  const std::string binary = orc_binary();
  const std::string models = models_dir().string();
  const std::string store_arg = store.string();
  const std::string timeout = std::to_string(lock_timeout);
  std::vector<std::string> args{binary, "--cgi", "--models", models, "--store", store_arg, "--lock-timeout", timeout};

  std::vector<char*> argv, envp;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  for (auto& e : env_strings) envp.push_back(e.data());
  envp.push_back(nullptr);

  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0 || ::pipe(out_pipe) != 0) throw std::runtime_error("pipe failed");
  const auto start = std::chrono::steady_clock::now();
  const pid_t pid = ::fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    ::dup2(in_pipe[0], 0);
    ::dup2(out_pipe[1], 1);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::execve(argv[0], argv.data(), envp.data());
    ::_exit(127);
  }
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  std::thread writer([&] {
    if (body) {
      std::size_t off = 0;
      while (off < body->size()) {
        const auto n = ::write(in_pipe[1], body->data() + off, body->size() - off);
        if (n <= 0) break;
        off += static_cast<std::size_t>(n);
      }
    }
    ::close(in_pipe[1]);
  });
  std::string out;
  char buf[4096];
  for (;;) {
    const auto n = ::read(out_pipe[0], buf, sizeof buf);
    if (n <= 0) break;
    out.append(buf, static_cast<std::size_t>(n));
  }
  ::close(out_pipe[0]);
  writer.join();
  int status = 0;
  struct rusage usage {};
  ::wait4(pid, &status, 0, &usage);
  const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  CgiResult r;
  static_cast<HttpResult&>(r) = parse_cgi_output(out);
  r.seconds = elapsed;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.max_rss_kib = usage.ru_maxrss;
  return r;
}

struct TestServer::Impl {
  explicit Impl(const fs::path& store) : server(restconf::Config{models_dir(), store, std::chrono::seconds(5)}) {}
  restconf::Server server;
  std::thread thread;
};

TestServer::TestServer(const fs::path& store) : impl_(new Impl(store)) {
  port_ = impl_->server.bind("127.0.0.1", 0);
  if (port_ < 0) throw std::runtime_error("cannot bind test server");
  impl_->thread = std::thread([this] { impl_->server.listen(); });
}

TestServer::~TestServer() {
  impl_->server.stop();
  impl_->thread.join();
  delete impl_;
}

HttpResult TestServer::request(const std::string& method, const std::string& path,
                               const std::optional<std::string>& body, const std::string& content_type) {
  httplib::Client client("127.0.0.1", port_);
  client.set_keep_alive(false);
  const auto start = std::chrono::steady_clock::now();
  httplib::Request req;
  req.method = method;
  req.path = path;
  if (body) {
    req.body = *body;
    req.set_header("Content-Type", content_type);
  }
  auto res = client.send(req);
  HttpResult r;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!res) return r;
  r.status = res->status;
  r.body = res->body;
  for (const auto& [k, v] : res->headers) {
    std::string name = k;
    std::transform(name.begin(), name.end(), name.begin(), [](unsigned char c) { return std::tolower(c); });
    r.headers[name] = v;
  }
  return r;
}

restconf::Response call(const uci::Store& store, const std::string& method, const std::string& uri,
                        const std::optional<Json>& body) {
  std::optional<std::string> text;
  if (body) text = body->dump();
  return restconf::serve(example_models(), store, method, uri, text, "application/yang-data+json");
}

}  // namespace orc::test
