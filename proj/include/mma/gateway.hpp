#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "mma/http_types.hpp"
#include "mma/model.hpp"

namespace mma {

// Subjects and their salted credential digests. Raw credentials are hashed
// on the way in and never kept.
class CredentialStore {
 public:
  void add_subject(const std::string& subject, std::string_view credential,
                   std::set<std::string> sources);
  // Pre-hashed entry: digest = hex BLAKE2b(credential, key = salt).
  void add_digest(const std::string& subject, std::string salt, std::string digest,
                  std::set<std::string> sources);

  // Same amount of hashing whether or not the subject exists.
  bool verify(std::string_view subject, std::string_view credential) const;
  bool authorized(std::string_view subject, std::string_view source_id) const;
  bool knows_source(std::string_view source_id) const;
  std::size_t size() const noexcept { return subjects_.size(); }

  // {"users": [{"subject": "alice", "credential": "...", "sources": ["Pr1"]},
  //            {"subject": "bob", "salt": "...", "digest": "...", "sources": [...]}]}
  static CredentialStore from_json(const JsonValue& doc);
  static CredentialStore load(const std::string& path);

 private:
  struct Subject {
    std::string salt;
    std::string digest;
    std::set<std::string> sources;
  };
  std::map<std::string, Subject, std::less<>> subjects_;
};

struct GatewayConfig {
  std::string id = "gateway";
  std::string listen_host = "127.0.0.1";
  int listen_port = 1210;
  std::chrono::seconds ttl{3600};
  // Optional append-only file of grant digests (never raw tokens).
  std::string grants_path;
};

enum class IssueStatus { issued, bad_credential, unknown_source };

struct IssueResult {
  IssueStatus status = IssueStatus::bad_credential;
  std::optional<TokenGrant> grant;
};

struct Validity {
  bool valid = false;
  std::string subject;
};

// The authentication mementity at URI-P. Issues bearer tokens scoped to one
// private source and answers introspection requests from archives.
//
//   POST /token       {subject, credential, source_id, uri_r} -> {token, expires_in}
//   POST /introspect  {token, source_id} -> {active, subject?}
class AccessGateway {
 public:
  using ClockFn = std::function<Clock::time_point()>;

  AccessGateway(CredentialStore store, GatewayConfig config, ClockFn clock = [] {
    return Clock::now();
  });

  IssueResult issue_token(std::string_view subject, std::string_view credential,
                          std::string_view source_id, const std::optional<OriginalUri>& uri_r = {});
  Validity validate_token(std::string_view token, std::string_view source_id) const;
  // Drops expired grants; returns how many.
  std::size_t purge_expired();
  std::size_t live_grants() const;

  http::Response handle(const http::Request& request);

  const GatewayConfig& config() const noexcept { return config_; }

 private:
  struct Grant {
    std::string source_id;
    std::string subject;
    Clock::time_point expires_at;
  };
  void persist(const std::string& digest, const Grant& grant);
  void replay();

  CredentialStore store_;
  GatewayConfig config_;
  ClockFn clock_;
  mutable std::shared_mutex mu_;
  std::mutex file_mu_;
  // Keyed by the token's digest; the token itself is only ever returned to
  // the subject.
  std::map<std::string, Grant> grants_;
};

// 401 a private archive answers without a valid token:
// `WWW-Authenticate: Bearer realm="<source_id>"` and
// `Link: <uri_p>; rel="authenticate"`.
http::Response challenge_response_for_private(std::string_view source_id, std::string_view uri_p,
                                              std::string_view uri_r);

GatewayConfig gateway_config_from_json(const JsonValue& doc);

}  // namespace mma
