#include "mma/engine.hpp"

#include <algorithm>
#include <future>
#include <set>
#include <unordered_map>

#include "mma/codec.hpp"
#include "mma/crypto.hpp"
#include "mma/link_header.hpp"
#include "mma/log.hpp"

namespace mma {
namespace {

std::string dedup_key(const std::string& uri_m) {
  try {
    return canonical_form(uri_m);
  } catch (const UriError&) {
    return uri_m;
  }
}

void fill_absent(MementoRecord& kept, const MementoRecord& other) {
  if (!kept.content.status_code) kept.content.status_code = other.content.status_code;
  if (!kept.content.content_type) kept.content.content_type = other.content.content_type;
  if (!kept.content.last_modified) kept.content.last_modified = other.content.last_modified;
  if (!kept.damage) kept.damage = other.damage;
  if (!kept.access) kept.access = other.access;
  for (const auto& [key, value] : other.extensions) kept.extensions.try_emplace(key, value);
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += ", ";
    out += item;
  }
  return out;
}

}  // namespace

std::string_view to_string(SourceOutcome outcome) noexcept {
  switch (outcome) {
    case SourceOutcome::ok: return "ok";
    case SourceOutcome::timeout: return "timeout";
    case SourceOutcome::http_error: return "http_error";
    case SourceOutcome::auth_required: return "auth_required";
    case SourceOutcome::unreachable: return "unreachable";
  }
  return "unreachable";
}

bool AggregateReport::any_outcome(SourceOutcome outcome) const {
  return std::any_of(per_source.begin(), per_source.end(),
                     [&](const SourceResult& r) { return r.outcome == outcome; });
}

bool AggregateReport::loop_detected() const {
  return std::any_of(per_source.begin(), per_source.end(), [](const SourceResult& r) {
    return r.outcome == SourceOutcome::http_error && r.http_status == 508;
  });
}

TimeMap merge_timemaps(const std::vector<std::pair<std::string, TimeMap>>& parts) {
  TimeMap out;
  for (const auto& [id, tm] : parts) {
    if (!tm.original) continue;
    if (!out.original) {
      out.original = tm.original;
    } else if (!out.original->same_resource(*tm.original)) {
      throw MergeError("source " + id + " answered for " + tm.original->canonical() +
                       ", expected " + out.original->canonical());
    }
  }

  struct Entry {
    MementoRecord record;
    std::size_t part;
  };
  std::vector<Entry> entries;
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& [source_id, tm] = parts[p];
    for (const auto& record : tm.mementos) {
      const auto [it, inserted] = index.try_emplace(dedup_key(record.uri_m), entries.size());
      if (!inserted) {
        fill_absent(entries[it->second].record, record);
        continue;
      }
      Entry entry{record, p};
      entry.record.extensions.try_emplace(std::string(kViaAttribute), source_id);
      entries.push_back(std::move(entry));
    }
  }

  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.record.datetime != b.record.datetime) return a.record.datetime < b.record.datetime;
    if (a.part != b.part) return a.part < b.part;
    return a.record.uri_m < b.record.uri_m;
  });
  out.mementos.reserve(entries.size());
  for (auto& entry : entries) out.mementos.push_back(std::move(entry.record));
  assign_rels(out.mementos);
  return out;
}

CycleDecision guard_cycles(const std::vector<std::string>& incoming_via, std::string_view self_id,
                           std::size_t depth_limit) {
  CycleDecision decision;
  const bool seen =
      std::find(incoming_via.begin(), incoming_via.end(), self_id) != incoming_via.end();
  if (seen || incoming_via.size() >= depth_limit) return decision;
  decision.proceed = true;
  decision.via = incoming_via;
  decision.via.emplace_back(self_id);
  return decision;
}

std::optional<std::string> authenticate_link(const http::Headers& headers) {
  for (const auto& value : headers.get_all("Link")) {
    try {
      for (const auto& link : parse_link_values(value, true).links) {
        if (link.has_rel("authenticate")) return link.target;
      }
    } catch (const Error&) {
    }
  }
  return std::nullopt;
}

AggregationEngine::AggregationEngine(std::shared_ptr<const SourceClient> client)
    : client_(std::move(client)) {}

SourceResult AggregationEngine::query_source(const SourceDescriptor& source,
                                             const OriginalUri& uri_r,
                                             const std::optional<std::string>& token,
                                             std::chrono::milliseconds budget,
                                             const std::vector<std::string>& via) const {
  SourceResult result;
  result.source_id = source.id;

  FetchRequest request;
  request.url = source.timemap_url(uri_r.value());
  request.timeout = budget;
  request.headers.add("Accept", "text/x-cdxj, application/link-format;q=0.9, application/json;q=0.8");
  if (!via.empty()) request.headers.add(std::string(kViaHeader), join(via));
  if (token && source.is_private()) request.headers.add("Authorization", "Bearer " + *token);

  const auto start = std::chrono::steady_clock::now();
  const FetchResponse response = client_->fetch(request);
  result.elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
      std::chrono::steady_clock::now() - start);

  if (response.failure != FetchResponse::Failure::none) {
    result.outcome = response.failure == FetchResponse::Failure::timeout
                         ? SourceOutcome::timeout
                         : SourceOutcome::unreachable;
    result.detail = response.error;
  } else if (response.status == 401) {
    result.http_status = 401;
    const auto uri_p = authenticate_link(response.headers);
    if (uri_p && !uri_p->empty()) {
      result.outcome = SourceOutcome::auth_required;
      result.uri_p = *uri_p;
    } else if (source.auth_pointer && !source.auth_pointer->empty()) {
      result.outcome = SourceOutcome::auth_required;
      result.uri_p = *source.auth_pointer;
    } else {
      result.outcome = SourceOutcome::http_error;
      result.detail = "401 without an authentication mementity";
    }
  } else if (response.status == 404) {
    // Conventional Memento archives answer 404 when they hold nothing.
    result.outcome = SourceOutcome::ok;
    result.timemap = TimeMap{};
    result.timemap->original = uri_r;
  } else if (response.status != 200) {
    result.outcome = SourceOutcome::http_error;
    result.http_status = response.status;
  } else {
    try {
      auto parsed = parse_by_media_type(response.headers.get("Content-Type").value_or(""),
                                        response.body, ParseMode::lenient);
      result.parse_warnings = parsed.warnings.size();
      // Nothing salvageable: the body was not a TimeMap at all.
      if (parsed.timemap.mementos.empty() && !parsed.warnings.empty()) {
        throw ParseError(parsed.warnings.front().message, parsed.warnings.front().line);
      }
      if (token && source.is_private()) {
        const AccessAttrs access{std::string(crypto::kTokenDigestType), crypto::blake2b_hex(*token)};
        for (auto& record : parsed.timemap.mementos) record.access = access;
      }
      result.outcome = SourceOutcome::ok;
      result.timemap = std::move(parsed.timemap);
    } catch (const Error& e) {
      result.outcome = SourceOutcome::http_error;
      result.http_status = 502;
      result.detail = e.what();
    }
  }

  log::logger()->debug("source {} -> {} ({} ms){}", source.id, to_string(result.outcome),
                       result.elapsed.count(),
                       result.http_status ? " status " + std::to_string(result.http_status) : "");
  return result;
}

AggregateReport AggregationEngine::execute_plan(const QueryPlan& plan,
                                                const std::vector<SourceDescriptor>& sources,
                                                const OriginalUri& uri_r, const TokenMap& tokens,
                                                std::chrono::milliseconds budget,
                                                const std::vector<std::string>& via) const {
  AggregateReport report;
  std::vector<std::pair<std::string, TimeMap>> parts;

  for (std::size_t t = 0; t < plan.tiers.size(); ++t) {
    const auto& tier = plan.tiers[t];
    std::vector<std::future<SourceResult>> pending;
    pending.reserve(tier.size());
    for (const auto& id : tier) {
      const auto it = std::find_if(sources.begin(), sources.end(),
                                   [&](const SourceDescriptor& s) { return s.id == id; });
      if (it == sources.end()) {
        SourceResult missing;
        missing.source_id = id;
        missing.outcome = SourceOutcome::unreachable;
        missing.detail = "source not configured";
        std::promise<SourceResult> ready;
        ready.set_value(std::move(missing));
        pending.push_back(ready.get_future());
        continue;
      }
      std::optional<std::string> token;
      if (const auto tok = tokens.find(id); tok != tokens.end()) token = tok->second;
      pending.push_back(std::async(std::launch::async, [this, source = *it, &uri_r, token,
                                                        budget, &via] {
        return query_source(source, uri_r, token, budget, via);
      }));
    }

    // Merge only once the whole tier has settled; results keep plan order.
    std::vector<std::pair<std::string, TimeMap>> tier_parts;
    for (auto& f : pending) {
      SourceResult result = f.get();
      if (result.outcome == SourceOutcome::ok && result.timemap) {
        tier_parts.emplace_back(result.source_id, *result.timemap);
      }
      report.per_source.push_back(std::move(result));
    }
    std::set<std::string> tier_unique;
    for (const auto& [id, tm] : tier_parts) {
      for (const auto& r : tm.mementos) tier_unique.insert(dedup_key(r.uri_m));
    }
    parts.insert(parts.end(), tier_parts.begin(), tier_parts.end());
    report.tiers_executed = t + 1;

    if (!evaluate_short_circuit(plan, t, tier_unique.size())) {
      report.short_circuited = t + 1 < plan.tiers.size();
      break;
    }
  }

  // Archives may report the URI-R under their own alias (www., scheme);
  // the request's URI-R is authoritative.
  for (auto& [id, tm] : parts) {
    if (tm.original && !tm.original->same_resource(uri_r)) {
      log::logger()->info("source {} reported URI-R {}", id, tm.original->canonical());
    }
    tm.original = uri_r;
  }
  report.timemap = merge_timemaps(parts);
  report.timemap.original = uri_r;
  return report;
}

}  // namespace mma
