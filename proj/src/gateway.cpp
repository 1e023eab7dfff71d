#include "mma/gateway.hpp"

#include <fstream>
#include <mutex>

#include "mma/config.hpp"
#include "mma/crypto.hpp"
#include "mma/errors.hpp"
#include "mma/link_header.hpp"
#include "mma/log.hpp"

namespace mma {
namespace {

constexpr std::size_t kTokenBytes = 32;  // 256 bits
constexpr std::size_t kSaltBytes = 16;

http::Response json_response(int status, const JsonValue& body) {
  auto r = http::text_response(status, body.dump() + "\n", "application/json");
  r.headers.set("Cache-Control", "no-store");
  return r;
}

http::Response json_error(int status, std::string_view code, std::string_view description) {
  JsonValue body;
  body["error"] = std::string(code);
  body["error_description"] = std::string(description);
  return json_response(status, body);
}

std::int64_t epoch_seconds(Clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::seconds>(t.time_since_epoch()).count();
}

}  // namespace

// --- credentials ---------------------------------------------------------------

void CredentialStore::add_subject(const std::string& subject, std::string_view credential,
                                  std::set<std::string> sources) {
  std::string salt = crypto::random_hex(kSaltBytes);
  std::string digest = crypto::blake2b_hex(credential, salt);
  add_digest(subject, std::move(salt), std::move(digest), std::move(sources));
}

void CredentialStore::add_digest(const std::string& subject, std::string salt, std::string digest,
                                 std::set<std::string> sources) {
  if (subject.empty()) throw ConfigError("subject must not be empty");
  if (salt.empty()) throw ConfigError("subject " + subject + " has no salt");
  if (!subjects_.emplace(subject, Subject{std::move(salt), std::move(digest), std::move(sources)})
           .second) {
    throw ConfigError("duplicate subject " + subject);
  }
}

bool CredentialStore::verify(std::string_view subject, std::string_view credential) const {
  static const Subject dummy{std::string(2 * kSaltBytes, '0'), std::string(64, '0'), {}};
  const auto it = subjects_.find(subject);
  const Subject& s = it == subjects_.end() ? dummy : it->second;
  const bool match = crypto::constant_time_equal(crypto::blake2b_hex(credential, s.salt), s.digest);
  return match && it != subjects_.end();
}

bool CredentialStore::authorized(std::string_view subject, std::string_view source_id) const {
  const auto it = subjects_.find(subject);
  return it != subjects_.end() && it->second.sources.count(std::string(source_id));
}

bool CredentialStore::knows_source(std::string_view source_id) const {
  for (const auto& [name, s] : subjects_) {
    if (s.sources.count(std::string(source_id))) return true;
  }
  return false;
}

CredentialStore CredentialStore::from_json(const JsonValue& doc) {
  CredentialStore store;
  try {
    for (const auto& user : doc.at("users")) {
      const auto subject = user.at("subject").get<std::string>();
      auto sources = user.at("sources").get<std::set<std::string>>();
      if (user.contains("credential")) {
        store.add_subject(subject, user.at("credential").get<std::string>(), std::move(sources));
      } else {
        store.add_digest(subject, user.at("salt").get<std::string>(),
                         user.at("digest").get<std::string>(), std::move(sources));
      }
    }
  } catch (const JsonValue::exception& e) {
    throw ConfigError(std::string("bad users file: ") + e.what());
  }
  return store;
}

CredentialStore CredentialStore::load(const std::string& path) {
  return from_json(read_json_file(path));
}

// --- gateway -------------------------------------------------------------------

AccessGateway::AccessGateway(CredentialStore store, GatewayConfig config, ClockFn clock)
    : store_(std::move(store)), config_(std::move(config)), clock_(std::move(clock)) {
  if (config_.ttl <= std::chrono::seconds::zero()) throw ConfigError("ttl must be positive");
  replay();
}

IssueResult AccessGateway::issue_token(std::string_view subject, std::string_view credential,
                                       std::string_view source_id,
                                       const std::optional<OriginalUri>& uri_r) {
  IssueResult result;
  if (!store_.knows_source(source_id)) {
    result.status = IssueStatus::unknown_source;
    return result;
  }
  // Hash first so a bad subject and a bad password cost the same.
  const bool verified = store_.verify(subject, credential);
  if (!verified || !store_.authorized(subject, source_id)) {
    log::logger()->info("token refused for subject {} on {}", subject, source_id);
    return result;
  }
  TokenGrant grant;
  grant.token = crypto::random_hex(kTokenBytes);
  grant.source_id = std::string(source_id);
  grant.subject = std::string(subject);
  grant.expires_at = clock_() + config_.ttl;
  const std::string digest = crypto::blake2b_hex(grant.token);
  Grant stored{grant.source_id, grant.subject, grant.expires_at};
  {
    std::unique_lock lock(mu_);
    grants_[digest] = stored;
  }
  persist(digest, stored);
  log::logger()->info("issued token for subject {} on {}{}", subject, source_id,
                      uri_r ? " (" + uri_r->canonical() + ")" : std::string());
  result.status = IssueStatus::issued;
  result.grant = std::move(grant);
  return result;
}

Validity AccessGateway::validate_token(std::string_view token, std::string_view source_id) const {
  Validity out;
  const std::string digest = crypto::blake2b_hex(token);
  const auto now = clock_();
  std::shared_lock lock(mu_);
  const auto it = grants_.find(digest);
  if (it == grants_.end() || !crypto::constant_time_equal(it->first, digest)) return out;
  const Grant& g = it->second;
  if (now >= g.expires_at || g.source_id != source_id) return out;
  out.valid = true;
  out.subject = g.subject;
  return out;
}

std::size_t AccessGateway::purge_expired() {
  const auto now = clock_();
  std::unique_lock lock(mu_);
  return std::erase_if(grants_, [&](const auto& item) { return now >= item.second.expires_at; });
}

std::size_t AccessGateway::live_grants() const {
  const auto now = clock_();
  std::shared_lock lock(mu_);
  return std::count_if(grants_.begin(), grants_.end(),
                       [&](const auto& item) { return now < item.second.expires_at; });
}

http::Response AccessGateway::handle(const http::Request& request) {
  const bool token = request.target == "/token";
  const bool introspect = request.target == "/introspect";
  if (!token && !introspect) {
    if (request.method == "GET" && request.target == "/") {
      JsonValue doc;
      doc["id"] = config_.id;
      doc["token_endpoint"] = "token";
      doc["introspection_endpoint"] = "introspect";
      return json_response(200, doc);
    }
    return http::text_response(404, "not found\n");
  }
  if (request.method != "POST") {
    auto r = http::text_response(405, "method not allowed\n");
    r.headers.set("Allow", "POST");
    return r;
  }
  JsonValue body;
  try {
    body = JsonValue::parse(request.body);
  } catch (const JsonValue::parse_error&) {
    return json_error(400, "invalid_request", "body must be a JSON object");
  }
  if (!body.is_object()) return json_error(400, "invalid_request", "body must be a JSON object");
  auto field = [&](const char* name) -> std::optional<std::string> {
    if (!body.contains(name) || !body[name].is_string()) return std::nullopt;
    return body[name].get<std::string>();
  };

  if (introspect) {
    const auto tok = field("token");
    const auto source = field("source_id");
    if (!tok || !source) return json_error(400, "invalid_request", "token and source_id required");
    const auto validity = validate_token(*tok, *source);
    JsonValue out;
    out["active"] = validity.valid;
    if (validity.valid) out["subject"] = validity.subject;
    return json_response(200, out);
  }

  const auto subject = field("subject");
  const auto credential = field("credential");
  const auto source = field("source_id");
  if (!subject || !credential || !source) {
    return json_error(400, "invalid_request", "subject, credential and source_id required");
  }
  std::optional<OriginalUri> uri_r;
  if (const auto raw = field("uri_r")) {
    try {
      uri_r.emplace(*raw);
    } catch (const UriError& e) {
      return json_error(400, "invalid_request", std::string("bad uri_r: ") + e.what());
    }
  }
  const auto result = issue_token(*subject, *credential, *source, uri_r);
  switch (result.status) {
    case IssueStatus::unknown_source:
      return json_error(400, "invalid_target", "unknown source " + *source);
    case IssueStatus::bad_credential: {
      auto r = json_error(401, "invalid_grant", "authentication failed");
      r.headers.set("WWW-Authenticate", "Bearer realm=" + quote_string(*source));
      return r;
    }
    case IssueStatus::issued: break;
  }
  JsonValue out;
  out["token"] = result.grant->token;
  out["token_type"] = "Bearer";
  out["expires_in"] = config_.ttl.count();
  out["source_id"] = result.grant->source_id;
  return json_response(200, out);
}

void AccessGateway::persist(const std::string& digest, const Grant& grant) {
  if (config_.grants_path.empty()) return;
  JsonValue entry;
  entry["digest"] = digest;
  entry["source_id"] = grant.source_id;
  entry["subject"] = grant.subject;
  entry["expires_at"] = epoch_seconds(grant.expires_at);
  std::lock_guard lock(file_mu_);
  std::ofstream out(config_.grants_path, std::ios::app);
  out << entry.dump() << "\n";
}

void AccessGateway::replay() {
  if (config_.grants_path.empty()) return;
  std::ifstream in(config_.grants_path);
  std::string line;
  const auto now = clock_();
  while (std::getline(in, line)) {
    try {
      const auto entry = JsonValue::parse(line);
      Grant g{entry.at("source_id").get<std::string>(), entry.at("subject").get<std::string>(),
              Clock::time_point(std::chrono::seconds(entry.at("expires_at").get<std::int64_t>()))};
      if (now < g.expires_at) grants_[entry.at("digest").get<std::string>()] = std::move(g);
    } catch (const std::exception&) {
      // Torn trailing line; ignore.
    }
  }
}

http::Response challenge_response_for_private(std::string_view source_id, std::string_view uri_p,
                                              std::string_view uri_r) {
  auto r = http::text_response(401, "authentication required for " + std::string(uri_r) + "\n");
  r.headers.set("WWW-Authenticate", "Bearer realm=" + quote_string(source_id));
  r.headers.add("Link", format_link_value({std::string(uri_p), {{"rel", "authenticate"},
                                                               {"title", std::string(source_id)}}}));
  return r;
}

GatewayConfig gateway_config_from_json(const JsonValue& doc) {
  GatewayConfig config;
  try {
    config.id = doc.value("id", config.id);
    if (doc.contains("listen")) {
      parse_listen(doc.at("listen").get<std::string>(), config.listen_host, config.listen_port);
    }
    config.ttl = std::chrono::seconds(doc.value("ttl", 3600));
    config.grants_path = doc.value("grants", std::string());
  } catch (const JsonValue::exception& e) {
    throw ConfigError(std::string("bad gateway config: ") + e.what());
  }
  return config;
}

}  // namespace mma
