#pragma once

#include <atomic>
#include <functional>
#include <memory>
#include <string>
#include <thread>

#include "mma/http_types.hpp"

namespace httplib {
class Server;
}

namespace mma::http {

using Handler = std::function<Response(const Request&)>;

// Runs a handler on a background listener thread. The handler sees the raw
// request target and must be safe to call concurrently.
class Server {
 public:
  // port 0 picks a free port. Throws ConfigError when binding fails.
  Server(std::string host, int port, Handler handler);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  int port() const noexcept { return port_; }
  const std::string& host() const noexcept { return host_; }
  // "http://host:port"
  std::string base_url() const;
  void stop();

 private:
  std::string host_;
  int port_ = 0;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace mma::http
