#pragma once

#include <memory>
#include <string>

#include "service/engine.hpp"

namespace consearch {

// HTTP front end: /api/* goes to the engine, everything else is served from
// the configured UI directory.
class Server {
 public:
  explicit Server(Engine& engine);
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds host:port (port 0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop(). Call after bind().
  void listen();
  void stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace consearch
