#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mma/errors.hpp"
#include "mma/model.hpp"
#include "mma/precedence.hpp"
#include "mma/source_client.hpp"

namespace mma {

enum class SourceOutcome { ok, timeout, http_error, auth_required, unreachable };

std::string_view to_string(SourceOutcome outcome) noexcept;

struct SourceResult {
  std::string source_id;
  SourceOutcome outcome = SourceOutcome::unreachable;
  int http_status = 0;                 // set for http_error and auth_required
  std::string uri_p;                   // set for auth_required
  std::optional<TimeMap> timemap;      // present iff outcome == ok
  std::chrono::milliseconds elapsed{0};
  std::size_t parse_warnings = 0;
  std::string detail;
};

struct AggregateReport {
  TimeMap timemap;
  std::vector<SourceResult> per_source;
  std::size_t tiers_executed = 0;
  bool short_circuited = false;

  bool any_outcome(SourceOutcome outcome) const;
  bool loop_detected() const;
};

class MergeError : public Error {
 public:
  using Error::Error;
};

// Union of the parts' records with duplicate URI-Ms (canonical equality)
// collapsed onto the earliest-listed occurrence. The kept record gains any
// enrichment attribute it lacks from its duplicates and is stamped with the
// part's source id as "via" unless it already carries one. Output is sorted
// by (datetime, part index, uri_m) and rels are reassigned. Throws MergeError
// when parts disagree on the URI-R.
TimeMap merge_timemaps(const std::vector<std::pair<std::string, TimeMap>>& parts);

struct CycleDecision {
  bool proceed = false;
  std::vector<std::string> via;  // incoming list plus self when proceeding
};

// Refuses when self_id already appears in the incoming hop list or the list
// has reached depth_limit entries.
CycleDecision guard_cycles(const std::vector<std::string>& incoming_via, std::string_view self_id,
                           std::size_t depth_limit);

inline constexpr std::string_view kViaHeader = "X-MMA-Via";
inline constexpr std::chrono::milliseconds kDefaultSourceTimeout{5000};

// source id -> bearer token
using TokenMap = std::map<std::string, std::string>;

// Executes query plans against sources. Within a tier every source is queried
// concurrently; tiers run one after another and the plan's short-circuit
// rule is consulted after each. A failing source never fails the aggregate.
class AggregationEngine {
 public:
  explicit AggregationEngine(std::shared_ptr<const SourceClient> client = default_source_client());

  AggregateReport execute_plan(const QueryPlan& plan, const std::vector<SourceDescriptor>& sources,
                               const OriginalUri& uri_r, const TokenMap& tokens,
                               std::chrono::milliseconds budget = kDefaultSourceTimeout,
                               const std::vector<std::string>& via = {}) const;

  SourceResult query_source(const SourceDescriptor& source, const OriginalUri& uri_r,
                            const std::optional<std::string>& token,
                            std::chrono::milliseconds budget,
                            const std::vector<std::string>& via) const;

 private:
  std::shared_ptr<const SourceClient> client_;
};

// Pulls the URI-P out of `Link: <...>; rel="authenticate"` header values.
std::optional<std::string> authenticate_link(const http::Headers& headers);

}  // namespace mma
