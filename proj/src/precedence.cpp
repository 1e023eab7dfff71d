#include "mma/precedence.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace mma {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool host_suffix_match(const std::string& host, const std::string& suffix) {
  if (host == suffix) return true;
  return host.size() > suffix.size() && host.ends_with(suffix) &&
         host[host.size() - suffix.size() - 1] == '.';
}

}  // namespace

std::string_view to_string(PrecedenceProfile profile) noexcept {
  switch (profile) {
    case PrecedenceProfile::noArchives: return "noArchives";
    case PrecedenceProfile::publicOnly: return "publicOnly";
    case PrecedenceProfile::privateOnly: return "privateOnly";
    case PrecedenceProfile::privateFirst: return "privateFirst";
    case PrecedenceProfile::publicFirst: return "publicFirst";
  }
  return "noArchives";
}

std::optional<PrecedenceProfile> profile_from_string(std::string_view name) noexcept {
  for (const auto profile : all_profiles()) {
    if (to_string(profile) == name) return profile;
  }
  return std::nullopt;
}

const std::vector<PrecedenceProfile>& all_profiles() noexcept {
  static const std::vector<PrecedenceProfile> profiles = {
      PrecedenceProfile::noArchives, PrecedenceProfile::publicOnly,
      PrecedenceProfile::privateOnly, PrecedenceProfile::privateFirst,
      PrecedenceProfile::publicFirst};
  return profiles;
}

bool FilterRule::matches(const OriginalUri& uri_r) const {
  if (matcher.find("://") != std::string::npos) {
    try {
      return canonical_form(matcher) == uri_r.canonical();
    } catch (const std::exception&) {
      return false;
    }
  }
  const auto slash = matcher.find('/');
  const std::string host = lower(matcher.substr(0, slash));
  if (!host_suffix_match(uri_r.host(), host)) return false;
  if (slash == std::string::npos) return true;
  return uri_r.path_and_query() == matcher.substr(slash);
}

QueryPlan compile_plan(std::optional<PrecedenceProfile> profile,
                       const std::vector<FilterRule>& rules,
                       const std::vector<SourceDescriptor>& sources,
                       const OriginalUri& uri_r) {
  QueryPlan plan;

  std::vector<const SourceDescriptor*> candidates;
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (rules[i].matches(uri_r)) {
      plan.matched_rule = i;
      break;
    }
  }
  if (plan.matched_rule) {
    for (const auto& id : rules[*plan.matched_rule].source_ids) {
      const auto it = std::find_if(sources.begin(), sources.end(), [&](const auto& s) {
        return s.id == id && !s.ad_hoc;
      });
      if (it != sources.end() &&
          std::none_of(candidates.begin(), candidates.end(),
                       [&](const auto* c) { return c->id == id; })) {
        candidates.push_back(&*it);
      }
    }
  } else {
    for (const auto& s : sources) {
      if (!s.ad_hoc) candidates.push_back(&s);
    }
  }
  for (const auto& s : sources) {
    if (s.ad_hoc) candidates.push_back(&s);
  }

  std::vector<std::string> all, pub, priv;
  for (const auto* s : candidates) {
    all.push_back(s->id);
    (s->is_private() ? priv : pub).push_back(s->id);
  }

  auto single = [&plan](std::vector<std::string> tier) {
    if (tier.empty()) {
      plan.empty_partition = true;
    } else {
      plan.tiers.push_back(std::move(tier));
    }
  };
  auto ordered = [&plan](std::vector<std::string> first, std::vector<std::string> second) {
    plan.empty_partition = first.empty() || second.empty();
    if (first.empty() && second.empty()) return;
    plan.tiers.push_back(std::move(first));
    plan.tiers.push_back(std::move(second));
    plan.short_circuit = ShortCircuit::stop_when_nonempty;
  };

  if (!profile) {
    if (!all.empty()) plan.tiers.push_back(std::move(all));
    return plan;
  }
  switch (*profile) {
    case PrecedenceProfile::noArchives: break;
    case PrecedenceProfile::publicOnly: single(std::move(pub)); break;
    case PrecedenceProfile::privateOnly: single(std::move(priv)); break;
    case PrecedenceProfile::privateFirst: ordered(std::move(priv), std::move(pub)); break;
    case PrecedenceProfile::publicFirst: ordered(std::move(pub), std::move(priv)); break;
  }
  return plan;
}

bool evaluate_short_circuit(const QueryPlan& plan, std::size_t tier_index,
                            std::size_t tier_result_count) {
  if (tier_index >= plan.tiers.size()) {
    throw std::out_of_range("tier index " + std::to_string(tier_index) + " outside plan");
  }
  return !(plan.short_circuit == ShortCircuit::stop_when_nonempty && tier_result_count > 0);
}

}  // namespace mma
