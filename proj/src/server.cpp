#include <httplib.h>

#include <iostream>

#include "orc/restconf.hpp"

namespace orc::restconf {

struct Server::Impl {
  explicit Impl(Config c) : config(std::move(c)), models(load_models(config.models_dir)), store(config.store_dir, config.lock_timeout) {}

  Config config;
  yang::ModelSet models;
  uci::Store store;
  httplib::Server http;
};

Server::Server(Config config) : impl_(std::make_unique<Impl>(std::move(config))) {
  auto& http = impl_->http;
  // Strictly sequential, one request per connection.
  http.new_task_queue = [] { return new httplib::ThreadPool(1); };
  http.set_keep_alive_max_count(1);

  const auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    std::optional<std::string> body;
    if (!req.body.empty()) body = req.body;
    const auto r = serve(impl_->models, impl_->store, req.method, req.target, std::move(body),
                         req.get_header_value("Content-Type"));
    res.status = r.status;
    for (const auto& [name, value] : r.headers)
      if (name != "Content-Type") res.set_header(name, value);
    if (r.body) {
      res.set_content(r.body_text(), std::string(kMediaType));
    } else if (auto type = r.header("Content-Type")) {
      res.set_header("Content-Type", *type);
    }
  };
  http.Get(".*", handler);
  http.Post(".*", handler);
  http.Put(".*", handler);
  http.Delete(".*", handler);
  http.Options(".*", handler);
  http.Patch(".*", handler);
}

Server::~Server() = default;

int Server::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool Server::listen() { return impl_->http.listen_after_bind(); }

void Server::stop() { impl_->http.stop(); }

int run_server(const Config& config, const std::string& host, int port) {
  try {
    Server server(config);
    const int bound = server.bind(host, port);
    if (bound < 0) {
      std::cerr << "orc: cannot listen on " << host << ":" << port << "\n";
      return 1;
    }
    std::cerr << "orc: listening on " << host << ":" << bound << "\n";
    return server.listen() ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "orc: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace orc::restconf
