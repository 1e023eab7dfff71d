#include "mma/model.hpp"

#include <algorithm>

#include "mma/errors.hpp"

namespace mma {

void validate_record(const MementoRecord& record) {
  if (record.uri_m.empty()) throw ValidationError("memento URI is empty");
  if (!is_absolute_http_uri(record.uri_m)) {
    throw ValidationError("memento URI is not absolute: " + record.uri_m);
  }
  if (record.damage && !(*record.damage >= 0.0 && *record.damage <= 1.0)) {
    throw ValidationError("damage outside [0,1] for " + record.uri_m);
  }
}

std::optional<std::string> TimeMap::self_uri(std::string_view format_key) const {
  for (const auto& [key, uri] : self_uris) {
    if (key == format_key) return uri;
  }
  return std::nullopt;
}

void assign_rels(std::vector<MementoRecord>& records) {
  for (auto& r : records) r.rel = kRelMemento;
  if (records.empty()) return;
  if (records.size() == 1) {
    records.front().rel = kRelFirstLast;
    return;
  }
  records.front().rel = kRelFirst;
  records.back().rel = kRelLast;
}

void normalize(TimeMap& tm) {
  std::stable_sort(tm.mementos.begin(), tm.mementos.end(),
                   [](const MementoRecord& a, const MementoRecord& b) {
                     return a.datetime < b.datetime;
                   });
  assign_rels(tm.mementos);
}

std::vector<std::string> standard_contexts(const TimeMap& tm) {
  std::vector<std::string> out{std::string(kMementoContext)};
  const bool any_damage = std::any_of(tm.mementos.begin(), tm.mementos.end(),
                                      [](const auto& r) { return r.damage.has_value(); });
  const bool any_access = std::any_of(tm.mementos.begin(), tm.mementos.end(),
                                      [](const auto& r) { return r.access.has_value(); });
  if (any_damage) out.emplace_back(kDamageContext);
  if (any_access) out.emplace_back(kAccessContext);
  return out;
}

bool is_standard_context(std::string_view uri) noexcept {
  return uri == kMementoContext || uri == kDamageContext || uri == kAccessContext;
}

std::string_view to_string(SourceKind kind) noexcept {
  switch (kind) {
    case SourceKind::archive: return "archive";
    case SourceKind::aggregator: return "aggregator";
    case SourceKind::meta_aggregator: return "meta_aggregator";
  }
  return "archive";
}

std::string_view to_string(Visibility visibility) noexcept {
  return visibility == Visibility::private_ ? "private" : "public";
}

SourceKind source_kind_from_string(std::string_view s) {
  if (s == "archive") return SourceKind::archive;
  if (s == "aggregator") return SourceKind::aggregator;
  if (s == "meta_aggregator") return SourceKind::meta_aggregator;
  throw ValidationError("unknown source kind: " + std::string(s));
}

Visibility visibility_from_string(std::string_view s) {
  if (s == "public") return Visibility::public_;
  if (s == "private") return Visibility::private_;
  throw ValidationError("unknown visibility: " + std::string(s));
}

std::string SourceDescriptor::timemap_url(std::string_view uri_r) const {
  static constexpr std::string_view kPlaceholder = "{uri_r}";
  std::string url = timemap_endpoint;
  if (const auto pos = url.find(kPlaceholder); pos != std::string::npos) {
    url.replace(pos, kPlaceholder.size(), uri_r);
    return url;
  }
  return url + std::string(uri_r);
}

}  // namespace mma
