#include "mma/service.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "mma/link_header.hpp"
#include "mma/log.hpp"
#include "mma/prefer.hpp"
#include "mma/timegate.hpp"

namespace mma {
namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size() && hex_value(s[i + 1]) >= 0 &&
        hex_value(s[i + 2]) >= 0) {
      out += static_cast<char>(hex_value(s[i + 1]) * 16 + hex_value(s[i + 2]));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && http::iequals(s.substr(0, prefix.size()), prefix);
}

std::optional<PrecedenceProfile> requested_profile(const std::vector<Preference>& prefs) {
  for (const auto& value : preference_values(prefs, "profile")) {
    // Either the bare name or the advertised profile URI.
    const auto hash = value.rfind('#');
    const auto name = hash == std::string::npos ? std::string_view(value)
                                                : std::string_view(value).substr(hash + 1);
    if (const auto profile = profile_from_string(name)) return profile;
  }
  return std::nullopt;
}

http::Response problem(int status, const std::string& message) {
  return http::text_response(status, message + "\n");
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += sep;
    out += item;
  }
  return out;
}

}  // namespace

std::string uri_r_from_target(std::string_view rest) {
  if (starts_with_ci(rest, "http%3a") || starts_with_ci(rest, "https%3a")) {
    return percent_decode(rest);
  }
  return std::string(rest);
}

MoreArchives handle_more_archives(std::string_view header_value) {
  MoreArchives out;
  std::size_t ordinal = 0;
  for (const auto& entry : http::split_list(header_value)) {
    std::string target;
    std::vector<std::pair<std::string, std::string>> params;
    if (entry.front() == '<') {
      try {
        const auto parsed = parse_link_values(entry, false);
        if (parsed.links.size() != 1) throw ParseError("expected one entry", 0);
        target = parsed.links.front().target;
        params = parsed.links.front().params;
      } catch (const Error&) {
        ++out.warnings;
        continue;
      }
    } else {
      target = entry.substr(0, entry.find(';'));
      while (!target.empty() && std::isspace(static_cast<unsigned char>(target.back()))) {
        target.pop_back();
      }
    }
    for (std::size_t pos; (pos = target.find("/*/")) != std::string::npos;) {
      target.replace(pos, 3, "/link/");
    }
    if (!is_absolute_http_uri(target)) {
      ++out.warnings;
      continue;
    }
    SourceDescriptor s;
    s.id = "adhoc" + std::to_string(++ordinal);
    s.timemap_endpoint = target;
    s.ad_hoc = true;
    for (const auto& [name, value] : params) {
      if (name == "id" && !value.empty()) s.id = value;
      if (name == "private" || (name == "visibility" && value == "private")) {
        s.visibility = Visibility::private_;
      }
      if (name == "auth" && is_absolute_http_uri(value)) s.auth_pointer = value;
    }
    out.sources.push_back(std::move(s));
  }
  return out;
}

TokenMap tokens_from_headers(const http::Headers& headers,
                             const std::vector<const SourceDescriptor*>& private_candidates) {
  TokenMap tokens;
  for (const auto& value : headers.get_all(kArchiveTokenHeader)) {
    for (const auto& item : http::split_list(value)) {
      const auto colon = item.find(':');
      if (colon == std::string::npos || colon == 0 || colon + 1 == item.size()) continue;
      tokens[item.substr(0, colon)] = item.substr(colon + 1);
    }
  }
  if (const auto auth = headers.get("Authorization");
      auth && starts_with_ci(*auth, "Bearer ") && private_candidates.size() == 1) {
    std::string token = auth->substr(7);
    token.erase(0, token.find_first_not_of(' '));
    if (!token.empty()) tokens.try_emplace(private_candidates.front()->id, token);
  }
  return tokens;
}

std::string profile_uri(std::string_view base_url, PrecedenceProfile profile) {
  return std::string(base_url) + std::string(kProfilesPath) + "#" + std::string(to_string(profile));
}

MmaService::MmaService(ServiceConfig config, std::shared_ptr<const SourceClient> client)
    : config_(std::move(config)), engine_(std::move(client)) {
  config_.validate();
  if (config_.public_base) base_url_ = *config_.public_base;
}

void MmaService::set_base_url(std::string base) {
  std::lock_guard lock(base_mu_);
  if (!config_.public_base) base_url_ = std::move(base);
}

std::string MmaService::base_url() const {
  std::lock_guard lock(base_mu_);
  return base_url_;
}

http::Response MmaService::handle(const http::Request& request) const {
  if (request.method != "GET" && request.method != "HEAD") {
    auto r = problem(405, "method not allowed");
    r.headers.set("Allow", "GET, HEAD");
    return r;
  }
  std::string_view target = request.target;
  if (target == kProfilesPath) return handle_profiles();
  if (target.starts_with("/timemap/")) {
    const auto rest = target.substr(9);
    const auto slash = rest.find('/');
    if (slash == std::string_view::npos) return problem(404, "no URI-R in path");
    return handle_timemap(rest.substr(0, slash), uri_r_from_target(rest.substr(slash + 1)),
                          request.headers);
  }
  if (target.starts_with("/timegate/")) {
    return handle_timegate(uri_r_from_target(target.substr(10)), request.headers);
  }
  return problem(404, "not found");
}

MmaService::Outcome MmaService::aggregate(const OriginalUri& uri_r,
                                          const http::Headers& headers) const {
  Outcome outcome;

  std::vector<std::string> incoming;
  for (const auto& value : headers.get_all(kViaHeader)) {
    for (auto& id : http::split_list(value)) incoming.push_back(std::move(id));
  }
  const auto decision = guard_cycles(incoming, config_.self_id, config_.depth_limit);
  if (!decision.proceed) {
    log::logger()->warn("{} refusing request: hop list [{}]", config_.self_id, join(incoming, ", "));
    outcome.early = problem(508, "loop detected: " + join(incoming, ", ") + " -> " + config_.self_id);
    return outcome;
  }

  outcome.profile = requested_profile(parse_prefer(headers));

  std::vector<SourceDescriptor> sources = config_.sources;
  const auto more = handle_more_archives(join(headers.get_all(kMoreArchivesHeader), ", "));
  outcome.more_archive_warnings = more.warnings;
  std::set<std::string> ids;
  for (const auto& s : sources) ids.insert(s.id);
  ids.insert(config_.self_id);
  for (auto s : more.sources) {
    // Runtime sources can never shadow configured ones.
    const std::string base = s.id;
    for (int n = 2; ids.count(s.id); ++n) s.id = base + "-" + std::to_string(n);
    ids.insert(s.id);
    sources.push_back(std::move(s));
  }

  const auto plan = compile_plan(outcome.profile, config_.rules, sources, uri_r);
  std::vector<const SourceDescriptor*> private_candidates;
  for (const auto& tier : plan.tiers) {
    for (const auto& id : tier) {
      const auto it = std::find_if(sources.begin(), sources.end(),
                                   [&](const SourceDescriptor& s) { return s.id == id; });
      if (it != sources.end() && it->is_private()) private_candidates.push_back(&*it);
    }
  }
  const TokenMap tokens = tokens_from_headers(headers, private_candidates);

  // A private archive supplied at request time is only queried with a
  // credential for it.
  for (const auto* s : private_candidates) {
    if (!s->ad_hoc || tokens.count(s->id)) continue;
    auto r = problem(401, "runtime archive " + s->id + " is private; supply a token for it");
    r.headers.set("WWW-Authenticate", "Bearer realm=" + quote_string(s->id));
    if (s->auth_pointer) {
      r.headers.add("Link", format_link_value({*s->auth_pointer, {{"rel", "authenticate"},
                                                                   {"title", s->id}}}));
    }
    outcome.early = std::move(r);
    return outcome;
  }

  outcome.report = engine_.execute_plan(plan, sources, uri_r, tokens, config_.timeout, decision.via);
  return outcome;
}

void MmaService::decorate(http::Response& response, const Outcome& outcome) const {
  std::vector<std::string> vary = {"Prefer", std::string(kMoreArchivesHeader)};
  if (outcome.profile) {
    response.headers.set("Preference-Applied",
                         format_preference("profile", to_string(*outcome.profile)));
    response.headers.add("Link", format_link_value({profile_uri(base_url(), *outcome.profile),
                                                    {{"rel", "profile"}}}));
  }
  if (auto existing = response.headers.get("Vary")) vary.insert(vary.begin(), *existing);
  response.headers.set("Vary", join(vary, ", "));
  std::vector<std::string> sources;
  for (const auto& r : outcome.report.per_source) {
    sources.push_back(r.source_id + "=" + std::string(to_string(r.outcome)));
  }
  if (!sources.empty()) response.headers.set(std::string(kSourcesHeader), join(sources, ", "));
  if (outcome.more_archive_warnings) {
    response.headers.set("Warning", "199 - \"" + std::to_string(outcome.more_archive_warnings) +
                                        " X-More-Archives entries ignored\"");
  }
}

std::optional<http::Response> MmaService::relay_failures(const Outcome& outcome,
                                                         TimeMapFormat format,
                                                         const TimeMap& body) const {
  const auto& report = outcome.report;
  if (report.loop_detected()) {
    std::vector<std::string> looped;
    for (const auto& r : report.per_source) {
      if (r.outcome == SourceOutcome::http_error && r.http_status == 508) looped.push_back(r.source_id);
    }
    return problem(508, "loop detected downstream via " + join(looped, ", "));
  }
  std::vector<const SourceResult*> challenges;
  for (const auto& r : report.per_source) {
    if (r.outcome == SourceOutcome::auth_required) challenges.push_back(&r);
  }
  if (challenges.empty()) return std::nullopt;

  // Relay the challenge; the body still carries whatever could be gathered.
  http::Response response;
  response.status = 401;
  response.headers.set("Content-Type", std::string(media_type(format)));
  response.body = serialize(body, format);
  for (const auto* r : challenges) {
    response.headers.add("WWW-Authenticate", "Bearer realm=" + quote_string(r->source_id));
    response.headers.add("Link", format_link_value({r->uri_p, {{"rel", "authenticate"},
                                                               {"title", r->source_id}}}));
  }
  return response;
}

http::Response MmaService::handle_timemap(std::string_view format_segment,
                                          std::string_view raw_uri_r,
                                          const http::Headers& headers) const {
  TimeMapFormat format;
  try {
    format = timemap_format_from_string(format_segment);
  } catch (const ValidationError&) {
    return problem(404, "unknown TimeMap format '" + std::string(format_segment) + "'");
  }
  return handle_timemap(format, raw_uri_r, headers);
}

http::Response MmaService::handle_timemap(TimeMapFormat format, std::string_view raw_uri_r,
                                          const http::Headers& headers) const {
  std::optional<OriginalUri> uri_r;
  try {
    uri_r.emplace(std::string(raw_uri_r));
  } catch (const UriError& e) {
    return problem(400, std::string("malformed URI-R: ") + e.what());
  }

  Outcome outcome = aggregate(*uri_r, headers);
  if (outcome.early) return *outcome.early;

  TimeMap& tm = outcome.report.timemap;
  const std::string base = base_url();
  tm.original = *uri_r;
  tm.timegate_uri = base + "/timegate/" + uri_r->value();
  tm.self_uris.clear();
  for (const auto f : {TimeMapFormat::link, TimeMapFormat::json, TimeMapFormat::cdxj}) {
    tm.self_uris.emplace_back(std::string(self_uri_key(f)),
                              base + "/timemap/" + std::string(to_string(f)) + "/" + uri_r->value());
  }

  http::Response response;
  if (auto failure = relay_failures(outcome, format, tm)) {
    response = std::move(*failure);
  } else {
    response.status = 200;
    response.headers.set("Content-Type", std::string(media_type(format)));
    response.body = serialize(tm, format);
  }
  decorate(response, outcome);
  return response;
}

http::Response MmaService::handle_timegate(std::string_view raw_uri_r,
                                           const http::Headers& headers) const {
  std::optional<OriginalUri> uri_r;
  try {
    uri_r.emplace(std::string(raw_uri_r));
  } catch (const UriError& e) {
    return problem(400, std::string("malformed URI-R: ") + e.what());
  }
  std::optional<MementoDatetime> target;
  if (const auto accept = headers.get("Accept-Datetime")) {
    try {
      target = MementoDatetime::from_rfc1123(*accept);
    } catch (const ValidationError& e) {
      return problem(400, std::string("bad Accept-Datetime: ") + e.what());
    }
  }

  Outcome outcome = aggregate(*uri_r, headers);
  if (outcome.early) return *outcome.early;

  const std::string timemap = base_url() + "/timemap/link/" + uri_r->value();
  http::Response response;
  if (auto failure = relay_failures(outcome, TimeMapFormat::link, outcome.report.timemap)) {
    response = std::move(*failure);
  } else if (const auto pick = select_memento(outcome.report.timemap.mementos, target)) {
    const auto& memento = outcome.report.timemap.mementos[*pick];
    response = http::text_response(302, "");
    response.headers.set("Location", memento.uri_m);
    response.headers.add("Link", format_link_value({uri_r->value(), {{"rel", "original"}}}));
    response.headers.add("Link", format_link_value({timemap, {{"rel", "timemap"},
                                                              {"type", "application/link-format"}}}));
    response.headers.add("Link", format_link_value({memento.uri_m, {{"rel", memento.rel},
                                                                    {"datetime", memento.datetime.to_rfc1123()}}}));
  } else {
    response = problem(404, "no mementos for " + uri_r->value());
  }
  response.headers.set("Vary", "accept-datetime");
  decorate(response, outcome);
  return response;
}

http::Response MmaService::handle_profiles() const {
  const std::string base = base_url();
  JsonValue doc;
  doc["id"] = config_.self_id;
  doc["default"] = "all candidate sources in one tier, no short-circuit";
  doc["profiles"] = JsonValue::array();
  const auto describe = [](PrecedenceProfile p) -> const char* {
    switch (p) {
      case PrecedenceProfile::noArchives: return "query no sources";
      case PrecedenceProfile::publicOnly: return "public sources only";
      case PrecedenceProfile::privateOnly: return "private sources only";
      case PrecedenceProfile::privateFirst: return "private sources, then public only if none answered";
      case PrecedenceProfile::publicFirst: return "public sources, then private only if none answered";
    }
    return "";
  };
  for (const auto p : all_profiles()) {
    JsonValue entry;
    entry["name"] = std::string(to_string(p));
    entry["uri"] = profile_uri(base, p);
    entry["description"] = describe(p);
    doc["profiles"].push_back(std::move(entry));
  }
  return http::text_response(200, doc.dump(2) + "\n", "application/json");
}

}  // namespace mma
