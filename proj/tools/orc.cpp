// orc: RESTCONF server over a UCI store, as a CGI program or a listener.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "orc/restconf.hpp"

extern char** environ;

int main(int argc, char** argv) {
  CLI::App app{"RESTCONF server backed by UCI configuration files"};
  orc::restconf::Config config;
  std::string models = "/usr/share/orc/models";
  std::string store = "/etc/config";
  bool cgi = false;
  std::string listen;
  double lock_timeout = 5.0;
  app.add_option("--models", models, "Directory of JIN model files")->capture_default_str();
  app.add_option("--store", store, "Directory of UCI package files")->capture_default_str();
  auto* cgi_flag = app.add_flag("--cgi", cgi, "Serve one CGI request (default when GATEWAY_INTERFACE is set)");
  app.add_option("--listen", listen, "Serve HTTP on addr:port")->excludes(cgi_flag);
  app.add_option("--lock-timeout", lock_timeout, "Seconds to wait for the store writer lock")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  config.models_dir = models;
  config.store_dir = store;
  config.lock_timeout = std::chrono::milliseconds(static_cast<long long>(lock_timeout * 1000));

  if (!listen.empty()) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) {
      std::cerr << "orc: --listen expects addr:port\n";
      return 2;
    }
    int port = 0;
    try {
      port = std::stoi(listen.substr(colon + 1));
    } catch (const std::exception&) {
      std::cerr << "orc: invalid port in '" << listen << "'\n";
      return 2;
    }
    return orc::restconf::run_server(config, listen.substr(0, colon), port);
  }

  if (!cgi && !std::getenv("GATEWAY_INTERFACE")) {
    std::cerr << "orc: choose --cgi or --listen <addr:port>\n";
    return 2;
  }
  std::map<std::string, std::string> env;
  for (char** e = environ; *e; ++e) {
    const std::string kv(*e);
    const auto eq = kv.find('=');
    if (eq != std::string::npos) env.emplace(kv.substr(0, eq), kv.substr(eq + 1));
  }
  std::ios::sync_with_stdio(false);
  return orc::restconf::run_cgi(env, std::cin, std::cout, config);
}
