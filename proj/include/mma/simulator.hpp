#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mma/gateway.hpp"
#include "mma/http_server.hpp"
#include "mma/model.hpp"
#include "mma/service.hpp"
#include "mma/source_client.hpp"
#include "mma/stargate.hpp"

namespace mma::sim {

struct Holding {
  MementoDatetime datetime;
  int status_code = 200;
  std::string content_type = "text/html";
};

struct Failure {
  enum class Kind { none, timeout, status };
  Kind kind = Kind::none;
  int status = 0;
};

struct SimArchiveSpec {
  std::string id;
  Visibility visibility = Visibility::public_;
  std::chrono::milliseconds latency{0};
  Failure failure;
  // Canonical URI-R -> captures.
  std::map<std::string, std::vector<Holding>> holdings;
  // URI-P of the gateway guarding a private archive.
  std::optional<std::string> auth;

  // Throws ConfigError when a private archive has no auth binding.
  void validate() const;
};

SimArchiveSpec archive_spec_from_json(const JsonValue& item);

struct LogEntry {
  Clock::time_point at;
  std::string method;
  std::string target;
  // Header names and values; Authorization and X-Archive-Token values are
  // replaced by "[redacted]".
  std::vector<std::pair<std::string, std::string>> headers;
};

// A Memento archive over scripted holdings.
//
//   GET /timemap/{link|json|cdxj}/{URI-R}   TimeMap (meta-only when empty)
//   GET /{14-digit datetime}/{URI-R}        the memento, with its scripted status
//
// Private archives check bearer tokens against the gateway's introspection
// endpoint before revealing anything.
class SimArchive {
 public:
  SimArchive(SimArchiveSpec spec, std::string host, int port = 0,
             std::shared_ptr<const SourceClient> client = default_source_client());
  ~SimArchive();

  http::Response handle(const http::Request& request);

  const SimArchiveSpec& spec() const noexcept { return spec_; }
  std::string base_url() const { return server_->base_url(); }
  // Endpoint to configure in an aggregator: base + "/timemap/cdxj/".
  std::string timemap_endpoint() const { return base_url() + "/timemap/cdxj/"; }
  std::string uri_m(const std::string& uri_r, const MementoDatetime& dt) const;

  std::vector<LogEntry> request_log() const;
  void reset_log();
  // Releases requests held by latency or the timeout failure mode.
  void interrupt();

 private:
  http::Response serve_timemap(std::string_view format, std::string_view raw_uri_r);
  http::Response serve_memento(std::string_view key, std::string_view raw_uri_r);
  bool authorized(const http::Headers& headers) const;
  // Sleeps unless the archive is shutting down; false if interrupted.
  bool pause(std::chrono::milliseconds d);

  SimArchiveSpec spec_;
  std::shared_ptr<const SourceClient> client_;
  mutable std::mutex mu_;
  std::condition_variable stop_cv_;
  bool stopping_ = false;
  std::vector<LogEntry> log_;
  std::unique_ptr<http::Server> server_;
};

// A set of mementities started from one topology document:
//
//   {
//     "gateways": [{"id": "gw", "ttl": 3600,
//                   "users": [{"subject": "alice", "credential": "pw", "sources": ["Pr1"]}]}],
//     "archives": [{"id": "A1", "visibility": "public", "latency_ms": 0,
//                   "failure": "none" | "timeout" | {"status": 451},
//                   "auth": "gw",
//                   "holdings": {"http://example.com/": [
//                       {"datetime": "20010101000000", "status_code": 200,
//                        "content_type": "text/html"}]}}],
//     "mmas": [{"id": "MA1", "kind": "aggregator", "sources": ["A1", "A2"],
//               "rules": [...], "depth_limit": 8, "timeout_ms": 5000}],
//     "stargates": [{"id": "sg", "upstream": "MA1"}]
//   }
//
// Every entry may pin "port"; otherwise a free port is used. MMA sources name
// archives or other MMAs, so cycles are allowed: every listener is bound
// before any service is configured.
class Simulator {
 public:
  explicit Simulator(const JsonValue& topology, std::string host = "127.0.0.1",
                     std::shared_ptr<const SourceClient> client = default_source_client());
  ~Simulator();
  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  static std::unique_ptr<Simulator> load(const std::string& path, std::string host = "127.0.0.1");

  SimArchive& archive(const std::string& id);
  MmaService& mma(const std::string& id);
  AccessGateway& gateway(const std::string& id);
  StarGateService& stargate(const std::string& id);
  // Base URL of any mementity by id.
  std::string base_url(const std::string& id) const;
  std::vector<std::string> ids() const;
  std::size_t mementity_count() const;

  void reset_logs();
  // Serves GET /_log/{id}, POST /_reset and GET /_topology.
  std::string start_control(int port = 0);
  http::Response handle_control(const http::Request& request);

 private:
  struct MmaSlot;
  struct StarGateSlot;
  struct GatewaySlot;

  std::string host_;
  std::shared_ptr<const SourceClient> client_;
  std::vector<std::string> order_;
  std::map<std::string, std::unique_ptr<GatewaySlot>> gateways_;
  std::map<std::string, std::unique_ptr<SimArchive>> archives_;
  std::map<std::string, std::unique_ptr<MmaSlot>> mmas_;
  std::map<std::string, std::unique_ptr<StarGateSlot>> stargates_;
  std::unique_ptr<http::Server> control_;
};

}  // namespace mma::sim
