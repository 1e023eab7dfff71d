#pragma once

#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mma/datetime.hpp"
#include "mma/uri.hpp"

namespace mma {

using JsonValue = nlohmann::ordered_json;

inline constexpr std::string_view kMementoContext = "https://oduwsdl.github.io/contexts/memento";
inline constexpr std::string_view kDamageContext = "https://oduwsdl.github.io/contexts/damage";
inline constexpr std::string_view kAccessContext = "https://oduwsdl.github.io/contexts/access";

inline constexpr std::string_view kRelMemento = "memento";
inline constexpr std::string_view kRelFirst = "first memento";
inline constexpr std::string_view kRelLast = "last memento";
inline constexpr std::string_view kRelFirstLast = "first last memento";

// Provenance attribute stamped on aggregated records.
inline constexpr std::string_view kViaAttribute = "via";

// Attributes observed when a URI-M is dereferenced.
struct ContentAttrs {
  std::optional<int> status_code;
  std::optional<std::string> content_type;
  std::optional<MementoDatetime> last_modified;

  bool empty() const noexcept { return !status_code && !content_type && !last_modified; }
  friend bool operator==(const ContentAttrs&, const ContentAttrs&) = default;
};

// `type` is an opaque label (e.g. "Blake2b") carried verbatim.
struct AccessAttrs {
  std::string type;
  std::string token;
  friend bool operator==(const AccessAttrs&, const AccessAttrs&) = default;
};

struct MementoRecord {
  std::string uri_m;
  MementoDatetime datetime;
  std::string rel{kRelMemento};
  ContentAttrs content;
  std::optional<double> damage;
  std::optional<AccessAttrs> access;
  // Attributes this build does not model, kept verbatim.
  std::map<std::string, JsonValue> extensions;

  friend bool operator==(const MementoRecord&, const MementoRecord&) = default;
};

// Throws ValidationError if uri_m is not absolute or damage is outside [0,1].
void validate_record(const MementoRecord& record);

struct TimeMap {
  std::optional<OriginalUri> original;
  std::optional<std::string> timegate_uri;
  // Format key ("link_format", "json_format", "cdxj_format") to TimeMap URI,
  // in document order.
  std::vector<std::pair<std::string, std::string>> self_uris;
  // Context URIs beyond the standard memento/damage/access set, which is
  // always derived from the records themselves.
  std::vector<std::string> context_uris;
  // !meta payloads with no modeled meaning, in document order.
  std::vector<JsonValue> extra_meta;
  std::vector<MementoRecord> mementos;

  std::optional<std::string> self_uri(std::string_view format_key) const;
  friend bool operator==(const TimeMap&, const TimeMap&) = default;
};

// Rewrites rel on every record: "first memento" on the first, "last memento"
// on the last, "first last memento" on a singleton, "memento" elsewhere.
void assign_rels(std::vector<MementoRecord>& records);

// Stable-sorts records by datetime, then assigns rels.
void normalize(TimeMap& tm);

// Standard contexts implied by the records, in fixed order: memento always,
// damage if any record carries damage, access if any carries access.
std::vector<std::string> standard_contexts(const TimeMap& tm);
bool is_standard_context(std::string_view uri) noexcept;

enum class SourceKind { archive, aggregator, meta_aggregator };
enum class Visibility { public_, private_ };

std::string_view to_string(SourceKind kind) noexcept;
std::string_view to_string(Visibility visibility) noexcept;
SourceKind source_kind_from_string(std::string_view s);
Visibility visibility_from_string(std::string_view s);

// One queryable mementity endpoint.
struct SourceDescriptor {
  std::string id;
  SourceKind kind = SourceKind::archive;
  Visibility visibility = Visibility::public_;
  // TimeMap endpoint. "{uri_r}" is substituted if present, otherwise the
  // URI-R is appended.
  std::string timemap_endpoint;
  std::optional<std::string> auth_pointer;
  // Supplied per request via X-More-Archives rather than configured.
  bool ad_hoc = false;

  bool is_private() const noexcept { return visibility == Visibility::private_; }
  std::string timemap_url(std::string_view uri_r) const;
  friend bool operator==(const SourceDescriptor&, const SourceDescriptor&) = default;
};

using Clock = std::chrono::system_clock;

struct TokenGrant {
  std::string token;
  std::string source_id;
  std::string subject;
  Clock::time_point expires_at;

  bool expired(Clock::time_point now) const noexcept { return now >= expires_at; }
};

}  // namespace mma
