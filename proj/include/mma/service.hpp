#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mma/codec.hpp"
#include "mma/config.hpp"
#include "mma/engine.hpp"
#include "mma/http_types.hpp"

namespace mma {

inline constexpr std::string_view kMoreArchivesHeader = "X-More-Archives";
inline constexpr std::string_view kArchiveTokenHeader = "X-Archive-Token";
inline constexpr std::string_view kSourcesHeader = "X-MMA-Sources";
inline constexpr std::string_view kProfilesPath = "/.well-known/mma-profiles";

struct MoreArchives {
  std::vector<SourceDescriptor> sources;
  std::size_t warnings = 0;
};

// Parses an X-More-Archives value: a comma-separated list of absolute TimeMap
// endpoints, each optionally in angle brackets and followed by parameters:
//
//   <http://local/coll/timemap/*/>; id=mine; private; auth="http://gw/"
//
// A "*" path segment stands for the TimeMap format and becomes "link". The
// URI-R is appended (or substituted for "{uri_r}"). Entries are public unless
// marked private. Malformed entries are skipped and counted.
MoreArchives handle_more_archives(std::string_view header_value);

// Bearer tokens keyed by source id, from `X-Archive-Token: id:token, ...`
// and `Authorization: Bearer <token>`. The bare bearer token is bound only
// when exactly one private source is among `candidates`.
TokenMap tokens_from_headers(const http::Headers& headers,
                             const std::vector<const SourceDescriptor*>& private_candidates);

// Profile URI advertised in rel="profile" links.
std::string profile_uri(std::string_view base_url, PrecedenceProfile profile);

// The meta-aggregator: TimeMap and TimeGate endpoints over a configured set
// of archives, aggregators and other meta-aggregators.
class MmaService {
 public:
  explicit MmaService(ServiceConfig config,
                      std::shared_ptr<const SourceClient> client = default_source_client());

  // Routes GET /timemap/{link|json|cdxj}/{URI-R}, GET /timegate/{URI-R} and
  // GET /.well-known/mma-profiles.
  http::Response handle(const http::Request& request) const;

  http::Response handle_timemap(TimeMapFormat format, std::string_view raw_uri_r,
                                const http::Headers& headers) const;
  // `format_segment` is the raw path segment; anything but link/json/cdxj is a 404.
  http::Response handle_timemap(std::string_view format_segment, std::string_view raw_uri_r,
                                const http::Headers& headers) const;
  http::Response handle_timegate(std::string_view raw_uri_r, const http::Headers& headers) const;
  http::Response handle_profiles() const;

  // Base used for self-referencing URIs; defaults to public_base, else to
  // whatever the listener reports once bound.
  void set_base_url(std::string base);
  std::string base_url() const;

  const ServiceConfig& config() const noexcept { return config_; }

 private:
  struct Outcome {
    std::optional<http::Response> early;  // refusal or client error
    AggregateReport report;
    std::optional<PrecedenceProfile> profile;
    std::size_t more_archive_warnings = 0;
  };
  Outcome aggregate(const OriginalUri& uri_r, const http::Headers& headers) const;
  void decorate(http::Response& response, const Outcome& outcome) const;
  std::optional<http::Response> relay_failures(const Outcome& outcome, TimeMapFormat format,
                                               const TimeMap& body) const;

  ServiceConfig config_;
  AggregationEngine engine_;
  mutable std::mutex base_mu_;
  std::string base_url_;
};

// Splits a raw request target "/prefix/rest" after `prefix`; the rest is the
// URI-R exactly as sent, percent-decoded only when the whole URI-R was
// encoded ("http%3A%2F%2F...").
std::string uri_r_from_target(std::string_view rest);

}  // namespace mma
