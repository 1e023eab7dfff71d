#include "mma/simulator.hpp"

#include <algorithm>
#include <cctype>

#include "mma/codec.hpp"
#include "mma/errors.hpp"
#include "mma/link_header.hpp"
#include "mma/log.hpp"

namespace mma::sim {
namespace {

constexpr std::string_view kRedacted = "[redacted]";

bool is_secret_header(std::string_view name) {
  return http::iequals(name, "Authorization") || http::iequals(name, kArchiveTokenHeader) ||
         http::iequals(name, "Cookie");
}

bool is_key14(std::string_view s) {
  return s.size() == 14 &&
         std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
}

http::Response json_response(int status, const JsonValue& doc) {
  return http::text_response(status, doc.dump(2) + "\n", "application/json");
}

Failure failure_from_json(const JsonValue& v) {
  Failure f;
  if (v.is_null()) return f;
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "none") return f;
    if (s == "timeout") {
      f.kind = Failure::Kind::timeout;
      return f;
    }
    throw ConfigError("unknown failure mode '" + s + "'");
  }
  const int status = v.is_number_integer() ? v.get<int>() : v.at("status").get<int>();
  if (status < 400 || status > 599) throw ConfigError("failure status must be 4xx or 5xx");
  f.kind = Failure::Kind::status;
  f.status = status;
  return f;
}

Holding holding_from_json(const JsonValue& v) {
  Holding h;
  if (v.is_string()) {
    h.datetime = MementoDatetime::from_key(v.get<std::string>());
    return h;
  }
  h.datetime = MementoDatetime::from_key(v.at("datetime").get<std::string>());
  h.status_code = v.value("status_code", h.status_code);
  h.content_type = v.value("content_type", h.content_type);
  return h;
}

}  // namespace

void SimArchiveSpec::validate() const {
  if (id.empty()) throw ConfigError("archive without id");
  if (visibility == Visibility::private_ && !auth) {
    throw ConfigError("private archive " + id + " has no auth binding");
  }
  if (latency.count() < 0) throw ConfigError("negative latency for " + id);
}

SimArchiveSpec archive_spec_from_json(const JsonValue& item) {
  SimArchiveSpec spec;
  try {
    spec.id = item.at("id").get<std::string>();
    spec.visibility = visibility_from_string(item.value("visibility", "public"));
    spec.latency = std::chrono::milliseconds(item.value("latency_ms", 0));
    if (item.contains("failure")) spec.failure = failure_from_json(item.at("failure"));
    if (item.contains("auth")) spec.auth = item.at("auth").get<std::string>();
    const auto holdings = item.value("holdings", JsonValue::object());
    for (const auto& [uri_r, list] : holdings.items()) {
      auto& out = spec.holdings[canonical_form(uri_r)];
      for (const auto& h : list) out.push_back(holding_from_json(h));
    }
  } catch (const JsonValue::exception& e) {
    throw ConfigError(std::string("bad archive entry: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("bad archive entry: ") + e.what());
  } catch (const UriError& e) {
    throw ConfigError(std::string("bad archive entry: ") + e.what());
  }
  return spec;
}

SimArchive::SimArchive(SimArchiveSpec spec, std::string host, int port,
                       std::shared_ptr<const SourceClient> client)
    : spec_(std::move(spec)), client_(std::move(client)) {
  spec_.validate();
  server_ = std::make_unique<http::Server>(std::move(host), port,
                                           [this](const http::Request& r) { return handle(r); });
}

SimArchive::~SimArchive() {
  interrupt();
  server_->stop();
}

void SimArchive::interrupt() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  stop_cv_.notify_all();
}

bool SimArchive::pause(std::chrono::milliseconds d) {
  if (d.count() <= 0) return true;
  std::unique_lock lock(mu_);
  return !stop_cv_.wait_for(lock, d, [this] { return stopping_; });
}

std::vector<LogEntry> SimArchive::request_log() const {
  std::lock_guard lock(mu_);
  return log_;
}

void SimArchive::reset_log() {
  std::lock_guard lock(mu_);
  log_.clear();
}

std::string SimArchive::uri_m(const std::string& uri_r, const MementoDatetime& dt) const {
  return base_url() + "/" + dt.to_key() + "/" + canonical_form(uri_r);
}

http::Response SimArchive::handle(const http::Request& request) {
  LogEntry entry{Clock::now(), request.method, request.target, {}};
  for (const auto& [name, value] : request.headers) {
    entry.headers.emplace_back(name, is_secret_header(name) ? std::string(kRedacted) : value);
  }
  {
    std::lock_guard lock(mu_);
    log_.push_back(std::move(entry));
  }

  if (spec_.failure.kind == Failure::Kind::timeout) {
    pause(std::chrono::hours(1));
    return http::text_response(503, "shutting down\n");
  }
  if (!pause(spec_.latency)) return http::text_response(503, "shutting down\n");
  if (spec_.failure.kind == Failure::Kind::status) {
    return http::text_response(spec_.failure.status, "scripted failure\n");
  }
  if (request.method != "GET" && request.method != "HEAD") {
    auto r = http::text_response(405, "method not allowed\n");
    r.headers.set("Allow", "GET, HEAD");
    return r;
  }

  const std::string_view target = request.target;
  if (target.size() < 2 || target[0] != '/') return http::text_response(404, "not found\n");
  const auto slash = target.find('/', 1);
  if (slash == std::string_view::npos) return http::text_response(404, "not found\n");
  const auto first = target.substr(1, slash - 1);

  std::string_view rest = target.substr(slash + 1);
  std::string_view format;
  if (first == "timemap") {
    const auto next = rest.find('/');
    if (next == std::string_view::npos) return http::text_response(404, "not found\n");
    format = rest.substr(0, next);
    rest = rest.substr(next + 1);
  } else if (!is_key14(first)) {
    return http::text_response(404, "not found\n");
  }

  const std::string raw_uri_r = uri_r_from_target(rest);
  if (spec_.visibility == Visibility::private_ && !authorized(request.headers)) {
    return challenge_response_for_private(spec_.id, *spec_.auth, raw_uri_r);
  }
  return first == "timemap" ? serve_timemap(format, raw_uri_r) : serve_memento(first, raw_uri_r);
}

bool SimArchive::authorized(const http::Headers& headers) const {
  const auto auth = headers.get("Authorization");
  if (!auth || auth->size() <= 7 || !http::iequals(std::string_view(*auth).substr(0, 7), "Bearer ")) {
    return false;
  }
  JsonValue body;
  body["token"] = auth->substr(7);
  body["source_id"] = spec_.id;
  FetchRequest req;
  req.method = "POST";
  req.url = *spec_.auth + "introspect";
  req.headers.set("Content-Type", "application/json");
  req.body = body.dump();
  const auto res = client_->fetch(req);
  if (res.failure != FetchResponse::Failure::none || res.status != 200) {
    log::logger()->warn("archive {}: introspection failed ({})", spec_.id,
                        res.failure == FetchResponse::Failure::none ? std::to_string(res.status)
                                                                    : res.error);
    return false;
  }
  try {
    return JsonValue::parse(res.body).value("active", false);
  } catch (const JsonValue::exception&) {
    return false;
  }
}

http::Response SimArchive::serve_timemap(std::string_view format_segment,
                                         std::string_view raw_uri_r) {
  TimeMapFormat format;
  try {
    format = timemap_format_from_string(format_segment);
  } catch (const ValidationError&) {
    return http::text_response(404, "unknown TimeMap format\n");
  }
  std::optional<OriginalUri> uri_r;
  try {
    uri_r.emplace(std::string(raw_uri_r));
  } catch (const UriError& e) {
    return http::text_response(400, std::string("malformed URI-R: ") + e.what() + "\n");
  }

  TimeMap tm;
  tm.original = *uri_r;
  for (const auto f : {TimeMapFormat::link, TimeMapFormat::json, TimeMapFormat::cdxj}) {
    tm.self_uris.emplace_back(std::string(self_uri_key(f)), base_url() + "/timemap/" +
                                                                std::string(to_string(f)) + "/" +
                                                                uri_r->value());
  }
  if (const auto it = spec_.holdings.find(uri_r->canonical()); it != spec_.holdings.end()) {
    for (const auto& h : it->second) {
      MementoRecord record;
      record.uri_m = uri_m(uri_r->canonical(), h.datetime);
      record.datetime = h.datetime;
      tm.mementos.push_back(std::move(record));
    }
  }
  normalize(tm);
  return http::text_response(200, serialize(tm, format), std::string(media_type(format)));
}

http::Response SimArchive::serve_memento(std::string_view key, std::string_view raw_uri_r) {
  std::optional<OriginalUri> uri_r;
  MementoDatetime dt;
  try {
    uri_r.emplace(std::string(raw_uri_r));
    dt = MementoDatetime::from_key(key);
  } catch (const Error& e) {
    return http::text_response(400, std::string(e.what()) + "\n");
  }
  const auto it = spec_.holdings.find(uri_r->canonical());
  if (it == spec_.holdings.end()) return http::text_response(404, "no such memento\n");
  const auto h = std::find_if(it->second.begin(), it->second.end(),
                              [&](const Holding& x) { return x.datetime == dt; });
  if (h == it->second.end()) return http::text_response(404, "no such memento\n");

  auto r = http::text_response(h->status_code,
                               "<html><body>" + uri_r->canonical() + " at " + dt.to_key() +
                                   "</body></html>\n",
                               h->content_type);
  r.headers.set("Memento-Datetime", dt.to_rfc1123());
  r.headers.add("Link", format_link_value({uri_r->canonical(), {{"rel", "original"}}}));
  if (h->status_code >= 300 && h->status_code < 400) r.headers.set("Location", uri_r->canonical());
  return r;
}

// A bound listener whose service is installed afterwards, so mementities can
// name each other in either direction.
struct Simulator::MmaSlot {
  std::mutex mu;
  std::shared_ptr<MmaService> service;
  std::string kind;
  std::unique_ptr<http::Server> server;
};

struct Simulator::StarGateSlot {
  std::unique_ptr<StarGateService> service;
  std::unique_ptr<http::Server> server;
};

struct Simulator::GatewaySlot {
  std::unique_ptr<AccessGateway> gateway;
  std::unique_ptr<http::Server> server;
};

Simulator::Simulator(const JsonValue& topology, std::string host,
                     std::shared_ptr<const SourceClient> client)
    : host_(std::move(host)), client_(std::move(client)) {
  auto claim = [this](const std::string& id) {
    if (id.empty()) throw ConfigError("mementity without id");
    if (std::find(order_.begin(), order_.end(), id) != order_.end()) {
      throw ConfigError("duplicate mementity id " + id);
    }
    order_.push_back(id);
  };
  auto port_of = [](const JsonValue& item) { return item.value("port", 0); };
  auto list = [&](const char* key) { return topology.value(key, JsonValue::array()); };

  try {
    for (const auto& item : list("gateways")) {
      const auto id = item.at("id").get<std::string>();
      claim(id);
      GatewayConfig config;
      config.id = id;
      config.listen_host = host_;
      config.ttl = std::chrono::seconds(item.value("ttl", 3600));
      config.grants_path = item.value("grants", std::string());
      JsonValue users;
      users["users"] = item.value("users", JsonValue::array());
      auto slot = std::make_unique<GatewaySlot>();
      slot->gateway = std::make_unique<AccessGateway>(CredentialStore::from_json(users), config);
      auto* gw = slot->gateway.get();
      slot->server = std::make_unique<http::Server>(
          host_, port_of(item), [gw](const http::Request& r) { return gw->handle(r); });
      gateways_.emplace(id, std::move(slot));
    }

    for (const auto& item : list("archives")) {
      auto spec = archive_spec_from_json(item);
      claim(spec.id);
      if (spec.auth && !is_absolute_http_uri(*spec.auth)) {
        const auto it = gateways_.find(*spec.auth);
        if (it == gateways_.end()) {
          throw ConfigError("archive " + spec.id + " names unknown gateway " + *spec.auth);
        }
        spec.auth = it->second->server->base_url() + "/";
      }
      const auto id = spec.id;
      archives_.emplace(id,
                        std::make_unique<SimArchive>(std::move(spec), host_, port_of(item), client_));
    }

    // Bind every aggregator first; services are installed once all
    // addresses are known.
    for (const auto& item : list("mmas")) {
      const auto id = item.at("id").get<std::string>();
      claim(id);
      auto slot = std::make_unique<MmaSlot>();
      slot->kind = item.value("kind", "meta_aggregator");
      source_kind_from_string(slot->kind);
      auto* raw = slot.get();
      slot->server = std::make_unique<http::Server>(
          host_, port_of(item), [raw](const http::Request& r) {
            std::shared_ptr<MmaService> service;
            {
              std::lock_guard lock(raw->mu);
              service = raw->service;
            }
            if (!service) return http::text_response(503, "starting\n");
            return service->handle(r);
          });
      mmas_.emplace(id, std::move(slot));
    }

    for (const auto& item : list("mmas")) {
      const auto id = item.at("id").get<std::string>();
      auto& slot = *mmas_.at(id);
      ServiceConfig config;
      config.self_id = id;
      config.listen_host = host_;
      config.listen_port = slot.server->port();
      config.public_base = slot.server->base_url();
      config.timeout = std::chrono::milliseconds(item.value("timeout_ms", 5000));
      config.depth_limit = item.value("depth_limit", std::size_t{8});
      for (const auto& src : item.value("sources", JsonValue::array())) {
        if (!src.is_string()) {
          config.sources.push_back(source_from_json(src));
          continue;
        }
        const auto ref = src.get<std::string>();
        SourceDescriptor d;
        d.id = ref;
        if (const auto a = archives_.find(ref); a != archives_.end()) {
          d.kind = SourceKind::archive;
          d.visibility = a->second->spec().visibility;
          d.timemap_endpoint = a->second->timemap_endpoint();
          d.auth_pointer = a->second->spec().auth;
        } else if (const auto m = mmas_.find(ref); m != mmas_.end()) {
          d.kind = source_kind_from_string(m->second->kind);
          d.timemap_endpoint = m->second->server->base_url() + "/timemap/cdxj/";
        } else {
          throw ConfigError("aggregator " + id + " names unknown source " + ref);
        }
        config.sources.push_back(std::move(d));
      }
      for (const auto& rule : item.value("rules", JsonValue::array())) {
        config.rules.push_back(rule_from_json(rule));
      }
      config.validate();
      auto service = std::make_shared<MmaService>(std::move(config), client_);
      std::lock_guard lock(slot.mu);
      slot.service = std::move(service);
    }

    for (const auto& item : list("stargates")) {
      const auto id = item.at("id").get<std::string>();
      claim(id);
      const auto upstream = item.at("upstream").get<std::string>();
      StarGateConfig config;
      config.self_id = id;
      config.listen_host = host_;
      config.timeout = std::chrono::milliseconds(item.value("timeout_ms", 5000));
      config.log_path = item.value("log", std::string());
      if (const auto m = mmas_.find(upstream); m != mmas_.end()) {
        config.upstream = m->second->server->base_url() + "/timemap/json/";
      } else if (is_absolute_http_uri(upstream)) {
        config.upstream = upstream;
      } else {
        throw ConfigError("stargate " + id + " names unknown upstream " + upstream);
      }
      auto slot = std::make_unique<StarGateSlot>();
      slot->service = std::make_unique<StarGateService>(std::move(config), client_);
      auto* sg = slot->service.get();
      slot->server = std::make_unique<http::Server>(
          host_, port_of(item), [sg](const http::Request& r) { return sg->handle(r); });
      stargates_.emplace(id, std::move(slot));
    }
  } catch (const JsonValue::exception& e) {
    throw ConfigError(std::string("bad topology: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("bad topology: ") + e.what());
  }
  log::logger()->info("simulator started {} mementities", order_.size());
}

Simulator::~Simulator() {
  for (auto& [id, a] : archives_) a->interrupt();
  if (control_) control_->stop();
  for (auto& [id, s] : stargates_) s->server->stop();
  for (auto& [id, s] : mmas_) s->server->stop();
}

std::unique_ptr<Simulator> Simulator::load(const std::string& path, std::string host) {
  return std::make_unique<Simulator>(read_json_file(path), std::move(host));
}

SimArchive& Simulator::archive(const std::string& id) {
  const auto it = archives_.find(id);
  if (it == archives_.end()) throw ConfigError("no archive " + id);
  return *it->second;
}

MmaService& Simulator::mma(const std::string& id) {
  const auto it = mmas_.find(id);
  if (it == mmas_.end()) throw ConfigError("no aggregator " + id);
  return *it->second->service;
}

AccessGateway& Simulator::gateway(const std::string& id) {
  const auto it = gateways_.find(id);
  if (it == gateways_.end()) throw ConfigError("no gateway " + id);
  return *it->second->gateway;
}

StarGateService& Simulator::stargate(const std::string& id) {
  const auto it = stargates_.find(id);
  if (it == stargates_.end()) throw ConfigError("no stargate " + id);
  return *it->second->service;
}

std::string Simulator::base_url(const std::string& id) const {
  if (const auto it = archives_.find(id); it != archives_.end()) return it->second->base_url();
  if (const auto it = mmas_.find(id); it != mmas_.end()) return it->second->server->base_url();
  if (const auto it = gateways_.find(id); it != gateways_.end()) {
    return it->second->server->base_url();
  }
  if (const auto it = stargates_.find(id); it != stargates_.end()) {
    return it->second->server->base_url();
  }
  throw ConfigError("no mementity " + id);
}

std::vector<std::string> Simulator::ids() const { return order_; }

std::size_t Simulator::mementity_count() const { return order_.size(); }

void Simulator::reset_logs() {
  for (auto& [id, a] : archives_) a->reset_log();
}

std::string Simulator::start_control(int port) {
  control_ = std::make_unique<http::Server>(
      host_, port, [this](const http::Request& r) { return handle_control(r); });
  return control_->base_url();
}

http::Response Simulator::handle_control(const http::Request& request) {
  const std::string_view target = request.target;
  if (target == "/_reset") {
    if (request.method != "POST") return http::text_response(405, "method not allowed\n");
    reset_logs();
    return http::text_response(204, "");
  }
  if (request.method != "GET") return http::text_response(405, "method not allowed\n");
  if (target == "/_topology") {
    JsonValue doc = JsonValue::object();
    for (const auto& id : order_) {
      std::string kind = archives_.count(id)   ? "archive"
                         : mmas_.count(id)     ? "mma"
                         : gateways_.count(id) ? "gateway"
                                               : "stargate";
      doc[id] = {{"kind", kind}, {"base_url", base_url(id)}};
    }
    return json_response(200, doc);
  }
  if (target.substr(0, 6) == "/_log/") {
    const auto it = archives_.find(std::string(target.substr(6)));
    if (it == archives_.end()) return http::text_response(404, "no such archive\n");
    JsonValue out = JsonValue::array();
    for (const auto& e : it->second->request_log()) {
      JsonValue headers = JsonValue::object();
      for (const auto& [name, value] : e.headers) headers[name] = value;
      out.push_back({{"at_ms", std::chrono::duration_cast<std::chrono::milliseconds>(
                                   e.at.time_since_epoch())
                                   .count()},
                     {"method", e.method},
                     {"target", e.target},
                     {"headers", headers}});
    }
    return json_response(200, out);
  }
  return http::text_response(404, "not found\n");
}

}  // namespace mma::sim
