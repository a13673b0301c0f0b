#include "service/server.hpp"

#include <stdexcept>

#include <httplib.h>

namespace consearch {

struct Server::Impl {
  Engine& engine;
  httplib::Server http;

  explicit Impl(Engine& e) : engine(e) {}

  void dispatch(const httplib::Request& req, httplib::Response& res) {
    ApiRequest api;
    api.method = req.method;
    api.path = req.target;
    api.body = req.body;
    api.authorization = req.get_header_value("Authorization");
    const ApiResponse out = engine.handle(api);
    res.status = out.status;
    res.set_content(out.body.dump(), "application/json");
  }
};

Server::Server(Engine& engine) : impl_(std::make_unique<Impl>(engine)) {
  auto handler = [this](const httplib::Request& req, httplib::Response& res) {
    impl_->dispatch(req, res);
  };
  const std::string api = R"(/api(/.*)?)";
  impl_->http.Get(api, handler);
  impl_->http.Post(api, handler);
  impl_->http.Patch(api, handler);
  impl_->http.Put(api, handler);
  impl_->http.Delete(api, handler);

  const auto& ui = engine.config().ui_dir;
  if (!ui.empty() && !impl_->http.set_mount_point("/", ui)) {
    throw std::runtime_error("UI directory " + ui + " does not exist");
  }
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->http.bind_to_any_port(host)
                              : (impl_->http.bind_to_port(host, port) ? port : -1);
  if (bound < 0) {
    throw std::runtime_error("cannot listen on " + host + ":" + std::to_string(port));
  }
  return bound;
}

void Server::listen() { impl_->http.listen_after_bind(); }

void Server::stop() {
  if (impl_->http.is_running()) impl_->http.stop();
}

bool Server::running() const { return impl_->http.is_running(); }

}  // namespace consearch
