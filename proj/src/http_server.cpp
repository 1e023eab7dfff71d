#include "mma/http_server.hpp"

#include <httplib.h>

#include "mma/errors.hpp"
#include "mma/log.hpp"

namespace mma::http {

Server::Server(std::string host, int port, Handler handler)
    : host_(std::move(host)), server_(std::make_unique<httplib::Server>()) {
  server_->set_keep_alive_max_count(1);
  // No SO_REUSEPORT: a second listener on a taken port must fail to bind.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  // Catch-all routes rather than a pre-routing hook: the latter runs before
  // the request body has been read.
  auto route = [handler = std::move(handler)](const httplib::Request& in, httplib::Response& out) {
    Request req;
    req.method = in.method;
    req.target = in.target;
    req.body = in.body;
    for (const auto& [name, value] : in.headers) {
      if (name == "REMOTE_ADDR" || name == "REMOTE_PORT" || name == "LOCAL_ADDR" ||
          name == "LOCAL_PORT") {
        continue;
      }
      req.headers.add(name, value);
    }
    Response res;
    try {
      res = handler(req);
    } catch (const std::exception& e) {
      log::logger()->error("handler failed for {} {}: {}", req.method, req.target, e.what());
      res = text_response(500, "internal error\n");
    }
    out.status = res.status;
    std::string content_type = "text/plain";
    for (const auto& [name, value] : res.headers) {
      if (iequals(name, "Content-Type")) {
        content_type = value;
      } else {
        out.headers.emplace(name, value);
      }
    }
    out.set_content(res.body, content_type);
  };
  server_->Get(".*", route);
  server_->Post(".*", route);
  server_->Put(".*", route);
  server_->Patch(".*", route);
  server_->Delete(".*", route);
  server_->Options(".*", route);

  if (port == 0) {
    port_ = server_->bind_to_any_port(host_);
    if (port_ < 0) throw ConfigError("cannot bind " + host_);
  } else {
    if (!server_->bind_to_port(host_, port)) {
      throw ConfigError("cannot bind " + host_ + ":" + std::to_string(port));
    }
    port_ = port;
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

Server::~Server() { stop(); }

void Server::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string Server::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace mma::http
