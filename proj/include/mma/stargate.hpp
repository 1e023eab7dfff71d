#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "mma/codec.hpp"
#include "mma/http_types.hpp"
#include "mma/model.hpp"
#include "mma/source_client.hpp"

namespace mma {

// ---------------------------------------------------------------------------
// Dimension filters: `Prefer: memento-filter="status_code = 200"`.

enum class FilterOp { eq, ne, lt, le, gt, ge };

std::string_view to_string(FilterOp op) noexcept;

struct DimensionFilter {
  std::string attribute;
  FilterOp op = FilterOp::eq;
  // Numbers compare numerically, strings exactly.
  std::variant<double, std::string> value;

  // False when the record lacks the attribute.
  bool matches(const MementoRecord& record) const;
  std::string to_string() const;
};

// Attribute names a filter may reference beyond the built-in ones
// (status_code, content_type, damage, access.type, last_modified).
using AttributeRegistry = std::set<std::string>;

// Accepts "attr OP value" with OP one of = == != < <= > >= or eq ne lt le gt
// ge. String values may be quoted. Throws ValidationError for an unknown
// attribute, an unknown operator, or an ordering operator on a string
// attribute.
DimensionFilter parse_filter(std::string_view text, const AttributeRegistry& extensions = {});

// ---------------------------------------------------------------------------
// Consensus over derived-attribute submissions.

struct ConsensusPolicy {
  std::size_t k = 3;
  double epsilon = 0.01;
};

// Agreed value among `values` (one per submitter), if any. Numbers agree when
// they fit in a window of width epsilon; the widest-populated window wins
// (earliest window on ties) and its median is the result. Strings agree when
// equal; the largest group wins (lexicographically first on ties).
std::optional<JsonValue> consensus(const std::vector<JsonValue>& values,
                                   const ConsensusPolicy& policy);

// A derived attribute submitters may report; numeric values must lie in
// [min, max].
struct DerivedAttribute {
  bool numeric = true;
  double min = 0.0;
  double max = 1.0;
};

std::map<std::string, DerivedAttribute> default_derived_attributes();

enum class SubmissionState { pending, accepted, rejected };

std::string_view to_string(SubmissionState state) noexcept;

// ---------------------------------------------------------------------------

struct CacheEntry {
  ContentAttrs content;
  Clock::time_point fetched_at{};
  // Accepted derived attributes, e.g. "damage".
  std::map<std::string, JsonValue> derived;
};

// Shared enrichment store keyed by canonical URI-M. Writers hold the lock
// for one read-modify-write; readers take a shared lock.
class EnrichmentCache {
 public:
  explicit EnrichmentCache(ConsensusPolicy policy = {},
                           std::map<std::string, DerivedAttribute> attributes =
                               default_derived_attributes());

  std::optional<CacheEntry> get(std::string_view uri_m) const;
  std::size_t size() const;

  void put_content(std::string_view uri_m, const ContentAttrs& content, Clock::time_point at);
  void put_derived(std::string_view uri_m, const std::string& attribute, const JsonValue& value);

  struct Submission {
    SubmissionState state = SubmissionState::pending;
    std::optional<JsonValue> accepted;
    std::string reason;  // set when rejected
  };
  // A submitter's later value replaces its earlier one.
  Submission submit(std::string_view uri_m, const std::string& attribute, const JsonValue& value,
                    const std::string& submitter);

  // Cached content attributes win over the record's; accepted derived
  // attributes fill damage and extensions.
  void overlay(MementoRecord& record) const;

  const std::map<std::string, DerivedAttribute>& attributes() const noexcept {
    return attributes_;
  }

 private:
  ConsensusPolicy policy_;
  std::map<std::string, DerivedAttribute> attributes_;
  mutable std::shared_mutex mu_;
  std::map<std::string, CacheEntry> entries_;
  std::map<std::pair<std::string, std::string>, std::map<std::string, JsonValue>> pending_;
};

// Fixed set of worker threads draining a FIFO queue.
class TaskPool {
 public:
  explicit TaskPool(std::size_t workers);
  ~TaskPool();
  TaskPool(const TaskPool&) = delete;
  TaskPool& operator=(const TaskPool&) = delete;

  void post(std::function<void()> task);
  // Blocks until the queue is empty and no task is running.
  void drain();

 private:
  void run();

  std::mutex mu_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::deque<std::function<void()>> queue_;
  std::size_t running_ = 0;
  bool stopping_ = false;
  std::vector<std::thread> threads_;
};

// Dereferences a URI-M without following redirects: HEAD, then GET when the
// server answers 405. nullopt on transport failure. Throws ValidationError for
// a non-HTTP URI.
std::optional<ContentAttrs> fetch_content_attrs(const SourceClient& client, std::string_view uri_m,
                                                std::chrono::milliseconds timeout);

struct StarGateConfig {
  std::string self_id = "stargate";
  std::string listen_host = "127.0.0.1";
  int listen_port = 1209;
  // TimeMap endpoint of the aggregator negotiated over (URI-R appended, or
  // substituted for "{uri_r}").
  std::string upstream;
  std::chrono::milliseconds timeout{5000};
  ConsensusPolicy consensus;
  std::map<std::string, DerivedAttribute> derived = default_derived_attributes();
  AttributeRegistry extensions = {std::string(kViaAttribute)};
  std::size_t workers = 4;
  // Append-only log of accepted enrichments; empty disables persistence.
  std::string log_path;
};

StarGateConfig stargate_config_from_json(const JsonValue& doc);

// The StarGate mementity.
//
//   GET  /stargate/{URI-R}   negotiate (Accept-Datetime, Prefer: memento-filter)
//   GET  /timemap/{fmt}/{URI-R}  upstream TimeMap with cached enrichment applied
//   GET  /calculate/{URI-M}  302 to the URI-M, enriching it in the background
//   POST /enrich/{URI-M}     {"attribute": ..., "value": ..., "submitter": ...}
class StarGateService {
 public:
  explicit StarGateService(StarGateConfig config,
                           std::shared_ptr<const SourceClient> client = default_source_client());
  ~StarGateService();

  http::Response handle(const http::Request& request);

  http::Response negotiate(std::string_view raw_uri_r, const http::Headers& headers);
  http::Response enriched_timemap(std::string_view format, std::string_view raw_uri_r,
                                  const http::Headers& headers);
  http::Response proxy_redirect(std::string_view uri_m);
  http::Response submit_derived(std::string_view uri_m, std::string_view body);

  // Synchronous enrichment; also used by the background path.
  std::optional<ContentAttrs> enrich_content(std::string_view uri_m);

  void drain() { pool_.drain(); }
  EnrichmentCache& cache() noexcept { return cache_; }
  bool registered(std::string_view uri_m) const;

 private:
  struct Upstream {
    std::optional<http::Response> failure;
    TimeMap timemap;
  };
  Upstream fetch_upstream(const OriginalUri& uri_r, const http::Headers& headers);
  void append_log(const JsonValue& entry);
  void replay_log();

  StarGateConfig config_;
  std::shared_ptr<const SourceClient> client_;
  EnrichmentCache cache_;
  mutable std::mutex registry_mu_;
  std::set<std::string> registered_;
  std::set<std::string> in_flight_;
  std::mutex log_mu_;
  TaskPool pool_;
};

}  // namespace mma
