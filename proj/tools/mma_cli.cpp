// mma: run the aggregation mementities, or query a running meta-aggregator.
//
//   mma serve mma       --config FILE [--listen HOST:PORT] [--timeout MS] [--depth-limit N]
//   mma serve stargate  --config FILE [--listen HOST:PORT]
//   mma serve gateway   --users FILE [--config FILE] [--listen HOST:PORT] [--ttl S]
//   mma serve simulator --topology FILE|NAME [--control HOST:PORT]
//   mma aggregate URI-R [--endpoint URL] [--format cdxj|link|json] [--profile NAME]
//                       [--more-archives ENTRY]... [--token ID:TOKEN]... [--bearer TOKEN]
//
// Exit codes: 0 ok, 1 network failure, 2 bad configuration or usage,
// 3 authentication required (URI-P printed), 4 not acceptable (406),
// 5 loop detected (508), 6 any other HTTP error.

#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mma/codec.hpp"
#include "mma/config.hpp"
#include "mma/errors.hpp"
#include "mma/gateway.hpp"
#include "mma/http_server.hpp"
#include "mma/link_header.hpp"
#include "mma/log.hpp"
#include "mma/prefer.hpp"
#include "mma/service.hpp"
#include "mma/simulator.hpp"
#include "mma/source_client.hpp"
#include "mma/stargate.hpp"

namespace {

enum Exit : int {
  kOk = 0,
  kNetwork = 1,
  kUsage = 2,
  kAuthRequired = 3,
  kNotAcceptable = 4,
  kLoop = 5,
  kHttpError = 6,
};

constexpr const char* kDefaultEndpoint = "http://127.0.0.1:1208";

// Blocks until SIGINT or SIGTERM. The signals are masked in main before any
// listener thread starts, so only this call ever sees them.
void wait_for_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
  std::cerr << "received " << (sig == SIGINT ? "SIGINT" : "SIGTERM") << ", shutting down\n";
}

void block_signals() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
}

// A bare name ("hierarchy") resolves against the bundled topologies.
std::string resolve_topology(const std::string& arg) {
  namespace fs = std::filesystem;
  if (fs::exists(arg)) return arg;
  for (const auto& dir : {std::string("config/topologies"), std::string(MMA_TOPOLOGY_DIR)}) {
    const auto candidate = fs::path(dir) / (arg + ".json");
    if (fs::exists(candidate)) return candidate.string();
  }
  throw mma::ConfigError("no topology file or bundled topology named '" + arg + "'");
}

struct ServeOptions {
  std::string config;
  std::string listen;
  std::optional<long> timeout_ms;
  std::optional<std::size_t> depth_limit;
  std::string users;
  std::optional<long> ttl;
  std::string topology;
  std::string control;
};

int serve_mma(const ServeOptions& o) {
  auto config = mma::load_service_config(o.config);
  if (!o.listen.empty()) mma::parse_listen(o.listen, config.listen_host, config.listen_port);
  if (o.timeout_ms) config.timeout = std::chrono::milliseconds(*o.timeout_ms);
  if (o.depth_limit) config.depth_limit = *o.depth_limit;
  config.validate();
  const auto host = config.listen_host;
  const auto port = config.listen_port;
  const auto sources = config.sources.size();
  auto service = std::make_shared<mma::MmaService>(std::move(config));
  mma::http::Server server(host, port,
                           [service](const mma::http::Request& r) { return service->handle(r); });
  if (!service->config().public_base) service->set_base_url(server.base_url());
  std::cerr << "MMA " << service->config().self_id << " listening on " << server.base_url()
            << " with " << sources << " sources\n";
  wait_for_signal();
  return kOk;
}

int serve_stargate(const ServeOptions& o) {
  auto config = mma::stargate_config_from_json(mma::read_json_file(o.config));
  if (!o.listen.empty()) mma::parse_listen(o.listen, config.listen_host, config.listen_port);
  if (o.timeout_ms) config.timeout = std::chrono::milliseconds(*o.timeout_ms);
  const auto host = config.listen_host;
  const auto port = config.listen_port;
  const auto upstream = config.upstream;
  auto service = std::make_shared<mma::StarGateService>(std::move(config));
  mma::http::Server server(host, port,
                           [service](const mma::http::Request& r) { return service->handle(r); });
  std::cerr << "StarGate listening on " << server.base_url() << " over " << upstream << "\n";
  wait_for_signal();
  server.stop();
  service->drain();
  return kOk;
}

int serve_gateway(const ServeOptions& o) {
  mma::GatewayConfig config;
  if (!o.config.empty()) config = mma::gateway_config_from_json(mma::read_json_file(o.config));
  if (!o.listen.empty()) mma::parse_listen(o.listen, config.listen_host, config.listen_port);
  if (o.ttl) config.ttl = std::chrono::seconds(*o.ttl);
  if (config.ttl.count() <= 0) throw mma::ConfigError("ttl must be positive");
  auto store = mma::CredentialStore::load(o.users);
  const auto subjects = store.size();
  const auto host = config.listen_host;
  const auto port = config.listen_port;
  auto gateway = std::make_shared<mma::AccessGateway>(std::move(store), std::move(config));
  mma::http::Server server(host, port,
                           [gateway](const mma::http::Request& r) { return gateway->handle(r); });
  std::cerr << "gateway " << gateway->config().id << " listening on " << server.base_url()
            << " with " << subjects << " subjects\n";
  wait_for_signal();
  return kOk;
}

int serve_simulator(const ServeOptions& o) {
  auto sim = mma::sim::Simulator::load(resolve_topology(o.topology));
  std::cerr << sim->mementity_count() << " mementities running\n";
  for (const auto& id : sim->ids()) std::cerr << "  " << id << "  " << sim->base_url(id) << "\n";
  if (!o.control.empty()) {
    std::string host = "127.0.0.1";
    int port = 0;
    mma::parse_listen(o.control, host, port);
    std::cerr << "control endpoint " << sim->start_control(port) << "\n";
  }
  wait_for_signal();
  return kOk;
}

struct AggregateOptions {
  std::string uri_r;
  std::string endpoint;
  std::string format = "cdxj";
  std::string profile;
  std::vector<std::string> more_archives;
  std::vector<std::string> tokens;
  std::string bearer;
  long timeout_ms = 10000;
};

int aggregate(const AggregateOptions& o) {
  mma::timemap_format_from_string(o.format);
  if (!o.profile.empty() && !mma::profile_from_string(o.profile)) {
    throw mma::ConfigError("unknown profile '" + o.profile + "'");
  }
  std::string endpoint = o.endpoint;
  if (endpoint.empty()) {
    const char* env = std::getenv("MMA_ENDPOINT");
    endpoint = env && *env ? env : kDefaultEndpoint;
  }
  while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();

  mma::FetchRequest req;
  req.url = endpoint + "/timemap/" + o.format + "/" + o.uri_r;
  req.timeout = std::chrono::milliseconds(o.timeout_ms);
  if (!o.profile.empty()) req.headers.add("Prefer", mma::format_preference("profile", o.profile));
  for (const auto& entry : o.more_archives) {
    req.headers.add(std::string(mma::kMoreArchivesHeader), entry);
  }
  for (const auto& token : o.tokens) req.headers.add(std::string(mma::kArchiveTokenHeader), token);
  if (!o.bearer.empty()) req.headers.add("Authorization", "Bearer " + o.bearer);

  const auto res = mma::HttpSourceClient().fetch(req);
  if (res.failure != mma::FetchResponse::Failure::none) {
    std::cerr << "request to " << endpoint << " failed: " << res.error << "\n";
    return kNetwork;
  }
  if (const auto sources = res.headers.get(mma::kSourcesHeader)) {
    std::cerr << "sources: " << *sources << "\n";
  }
  switch (res.status) {
    case 200:
      std::cout << res.body;
      return kOk;
    case 401: {
      std::cerr << "authentication required\n";
      for (const auto& value : res.headers.get_all("Link")) {
        for (const auto& link : mma::parse_link_values(value, true).links) {
          if (link.has_rel("authenticate")) std::cout << link.target << "\n";
        }
      }
      return kAuthRequired;
    }
    case 406:
      std::cerr << "not acceptable\n" << res.body;
      return kNotAcceptable;
    case 508:
      std::cerr << "loop detected in the aggregation hierarchy\n";
      return kLoop;
    default:
      std::cerr << "HTTP " << res.status << "\n" << res.body;
      return kHttpError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  block_signals();

  CLI::App app{"Memento meta-aggregation: serve mementities or query an aggregator"};
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Only log warnings and errors");

  ServeOptions serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run a mementity until SIGINT/SIGTERM");
  serve_cmd->require_subcommand(1);

  auto* mma_cmd = serve_cmd->add_subcommand("mma", "Meta-aggregator");
  mma_cmd->add_option("--config", serve.config, "Service config (JSON)")->required();
  mma_cmd->add_option("--listen", serve.listen, "HOST:PORT override");
  mma_cmd->add_option("--timeout", serve.timeout_ms, "Per-source timeout in ms")
      ->check(CLI::PositiveNumber);
  mma_cmd->add_option("--depth-limit", serve.depth_limit, "Maximum aggregation depth")
      ->check(CLI::PositiveNumber);

  auto* sg_cmd = serve_cmd->add_subcommand("stargate", "StarGate negotiation layer");
  sg_cmd->add_option("--config", serve.config, "StarGate config (JSON)")->required();
  sg_cmd->add_option("--listen", serve.listen, "HOST:PORT override");
  sg_cmd->add_option("--timeout", serve.timeout_ms, "Upstream timeout in ms")
      ->check(CLI::PositiveNumber);

  auto* gw_cmd = serve_cmd->add_subcommand("gateway", "Token-issuing access gateway");
  gw_cmd->add_option("--users", serve.users, "Credential store (JSON)")->required();
  gw_cmd->add_option("--config", serve.config, "Gateway config (JSON)");
  gw_cmd->add_option("--listen", serve.listen, "HOST:PORT override");
  gw_cmd->add_option("--ttl", serve.ttl, "Token lifetime in seconds")->check(CLI::PositiveNumber);

  auto* sim_cmd = serve_cmd->add_subcommand("simulator", "Simulated archives and aggregators");
  sim_cmd->add_option("--topology", serve.topology, "Topology file or bundled name (hierarchy, demo)")
      ->required();
  sim_cmd->add_option("--control", serve.control, "HOST:PORT for the log/reset endpoint");

  AggregateOptions agg;
  auto* agg_cmd = app.add_subcommand("aggregate", "Fetch an aggregated TimeMap to stdout");
  agg_cmd->add_option("uri_r", agg.uri_r, "Original resource URI")->required();
  agg_cmd->add_option("--endpoint", agg.endpoint, "MMA base URL (default $MMA_ENDPOINT or " +
                                                      std::string(kDefaultEndpoint) + ")");
  agg_cmd->add_option("--format", agg.format, "cdxj, link or json")
      ->check(CLI::IsMember({"cdxj", "link", "json"}));
  agg_cmd->add_option("--profile", agg.profile,
                      "noArchives, publicOnly, privateOnly, privateFirst or publicFirst");
  agg_cmd->add_option("--more-archives", agg.more_archives, "Extra TimeMap endpoint (repeatable)");
  agg_cmd->add_option("--token", agg.tokens, "SOURCE_ID:TOKEN for a private source (repeatable)");
  agg_cmd->add_option("--bearer", agg.bearer, "Bearer token for the single private source");
  agg_cmd->add_option("--timeout", agg.timeout_ms, "Request timeout in ms")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  if (quiet) mma::log::logger()->set_level(spdlog::level::warn);

  try {
    if (*agg_cmd) return aggregate(agg);
    if (*mma_cmd) return serve_mma(serve);
    if (*sg_cmd) return serve_stargate(serve);
    if (*gw_cmd) return serve_gateway(serve);
    if (*sim_cmd) return serve_simulator(serve);
  } catch (const mma::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kUsage;
  } catch (const mma::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
