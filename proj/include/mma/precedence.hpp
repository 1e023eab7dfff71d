#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mma/model.hpp"

namespace mma {

// The five named precedence profiles. A request that names none gets the
// conventional behavior: every candidate in one tier, no short-circuit.
enum class PrecedenceProfile { noArchives, publicOnly, privateOnly, privateFirst, publicFirst };

std::string_view to_string(PrecedenceProfile profile) noexcept;
std::optional<PrecedenceProfile> profile_from_string(std::string_view name) noexcept;
const std::vector<PrecedenceProfile>& all_profiles() noexcept;

// Restricts the candidate sources for URI-Rs it matches.
//
// Matcher grammar: a matcher with a scheme ("http://...") matches one exact
// canonical URI-R. Otherwise it is a host suffix ("facebook.com" matches
// "www.facebook.com"), optionally followed by a path that must equal the
// URI-R's path and query ("example.net/vacation.html").
struct FilterRule {
  std::string matcher;
  std::vector<std::string> source_ids;

  bool matches(const OriginalUri& uri_r) const;
};

enum class ShortCircuit { never, stop_when_nonempty };

struct QueryPlan {
  std::vector<std::vector<std::string>> tiers;
  ShortCircuit short_circuit = ShortCircuit::never;
  // Set when the profile asked for a partition with no sources in it.
  bool empty_partition = false;
  std::optional<std::size_t> matched_rule;

  friend bool operator==(const QueryPlan&, const QueryPlan&) = default;
};

// First matching rule wins and narrows the configured sources to its ids (in
// rule order); ad-hoc sources are never narrowed. The profile then splits the
// candidates by visibility:
//   noArchives   -> no tiers
//   publicOnly   -> [public]
//   privateOnly  -> [private]
//   privateFirst -> [private, public], stop when a tier returns mementos
//   publicFirst  -> [public, private], stop when a tier returns mementos
//   (none)       -> [all candidates]
// A single-partition profile whose partition is empty compiles to no tiers.
QueryPlan compile_plan(std::optional<PrecedenceProfile> profile,
                       const std::vector<FilterRule>& rules,
                       const std::vector<SourceDescriptor>& sources,
                       const OriginalUri& uri_r);

// True to continue with the next tier. Throws std::out_of_range when
// tier_index is not a tier of `plan`.
bool evaluate_short_circuit(const QueryPlan& plan, std::size_t tier_index,
                            std::size_t tier_result_count);

}  // namespace mma
