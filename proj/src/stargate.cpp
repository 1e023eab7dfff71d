#include "mma/stargate.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>

#include "mma/errors.hpp"
#include "mma/link_header.hpp"
#include "mma/log.hpp"
#include "mma/prefer.hpp"
#include "mma/service.hpp"
#include "mma/timegate.hpp"

namespace mma {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

std::optional<double> parse_number(std::string_view s) {
  double value = 0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) return std::nullopt;
  return value;
}

enum class Kind { numeric, text, datetime };

std::optional<Kind> builtin_kind(std::string_view attribute) {
  if (attribute == "status_code" || attribute == "damage") return Kind::numeric;
  if (attribute == "content_type" || attribute == "access.type") return Kind::text;
  if (attribute == "last_modified") return Kind::datetime;
  return std::nullopt;
}

bool is_ordering(FilterOp op) { return op != FilterOp::eq && op != FilterOp::ne; }

template <typename T>
bool compare(const T& lhs, FilterOp op, const T& rhs) {
  switch (op) {
    case FilterOp::eq: return lhs == rhs;
    case FilterOp::ne: return lhs != rhs;
    case FilterOp::lt: return lhs < rhs;
    case FilterOp::le: return lhs <= rhs;
    case FilterOp::gt: return lhs > rhs;
    case FilterOp::ge: return lhs >= rhs;
  }
  return false;
}

std::optional<FilterOp> op_from_token(std::string_view token) {
  static const std::pair<std::string_view, FilterOp> table[] = {
      {"=", FilterOp::eq},  {"==", FilterOp::eq}, {"!=", FilterOp::ne}, {"<", FilterOp::lt},
      {"<=", FilterOp::le}, {">", FilterOp::gt},  {">=", FilterOp::ge}, {"eq", FilterOp::eq},
      {"ne", FilterOp::ne}, {"lt", FilterOp::lt}, {"le", FilterOp::le}, {"gt", FilterOp::gt},
      {"ge", FilterOp::ge}};
  for (const auto& [text, op] : table) {
    if (http::iequals(text, token)) return op;
  }
  return std::nullopt;
}

double seconds_of(const MementoDatetime& dt) {
  return static_cast<double>(dt.instant().time_since_epoch().count());
}

std::string cache_key(std::string_view uri_m) {
  try {
    return canonical_form(uri_m);
  } catch (const UriError&) {
    return std::string(uri_m);
  }
}

http::Response json_response(int status, const JsonValue& body) {
  return http::text_response(status, body.dump() + "\n", "application/json");
}

std::int64_t epoch_seconds(Clock::time_point t) {
  return std::chrono::duration_cast<std::chrono::seconds>(t.time_since_epoch()).count();
}

}  // namespace

std::string_view to_string(FilterOp op) noexcept {
  switch (op) {
    case FilterOp::eq: return "=";
    case FilterOp::ne: return "!=";
    case FilterOp::lt: return "<";
    case FilterOp::le: return "<=";
    case FilterOp::gt: return ">";
    case FilterOp::ge: return ">=";
  }
  return "=";
}

std::string_view to_string(SubmissionState state) noexcept {
  switch (state) {
    case SubmissionState::pending: return "pending";
    case SubmissionState::accepted: return "accepted";
    case SubmissionState::rejected: return "rejected";
  }
  return "pending";
}

// --- filters ---------------------------------------------------------------

DimensionFilter parse_filter(std::string_view text, const AttributeRegistry& extensions) {
  const std::string t = trim(text);
  std::size_t i = 0;
  while (i < t.size() && (std::isalnum(static_cast<unsigned char>(t[i])) || t[i] == '_' ||
                          t[i] == '.' || t[i] == '-')) {
    ++i;
  }
  DimensionFilter filter;
  filter.attribute = t.substr(0, i);
  if (filter.attribute.empty()) throw ValidationError("filter has no attribute: " + t);
  const auto kind = builtin_kind(filter.attribute);
  if (!kind && !extensions.count(filter.attribute)) {
    throw ValidationError("unknown attribute '" + filter.attribute + "'");
  }

  while (i < t.size() && t[i] == ' ') ++i;
  std::size_t op_end = i;
  if (op_end < t.size() && std::string_view("=!<>").find(t[op_end]) != std::string_view::npos) {
    while (op_end < t.size() && std::string_view("=!<>").find(t[op_end]) != std::string_view::npos) {
      ++op_end;
    }
  } else {
    while (op_end < t.size() && std::isalpha(static_cast<unsigned char>(t[op_end]))) ++op_end;
  }
  const auto op = op_from_token(std::string_view(t).substr(i, op_end - i));
  if (!op) throw ValidationError("unknown operator in filter: " + t);
  filter.op = *op;

  std::string raw = trim(std::string_view(t).substr(op_end));
  const bool quoted = raw.size() >= 2 && (raw.front() == '"' || raw.front() == '\'') &&
                      raw.back() == raw.front();
  if (quoted) raw = raw.substr(1, raw.size() - 2);
  if (raw.empty()) throw ValidationError("filter has no value: " + t);

  const Kind effective = kind.value_or(!quoted && parse_number(raw) ? Kind::numeric : Kind::text);
  switch (effective) {
    case Kind::numeric: {
      const auto number = parse_number(raw);
      if (!number) throw ValidationError("'" + filter.attribute + "' needs a number, got " + raw);
      filter.value = *number;
      break;
    }
    case Kind::datetime: {
      const auto dt = raw.size() == 14 && std::all_of(raw.begin(), raw.end(), ::isdigit)
                          ? MementoDatetime::from_key(raw)
                          : MementoDatetime::from_rfc1123(raw);
      filter.value = seconds_of(dt);
      break;
    }
    case Kind::text:
      if (is_ordering(filter.op)) {
        throw ValidationError("ordering operator on text attribute '" + filter.attribute + "'");
      }
      filter.value = raw;
      break;
  }
  return filter;
}

bool DimensionFilter::matches(const MementoRecord& record) const {
  std::optional<double> number;
  std::optional<std::string> text;
  if (attribute == "status_code") {
    if (record.content.status_code) number = *record.content.status_code;
  } else if (attribute == "damage") {
    number = record.damage;
  } else if (attribute == "content_type") {
    text = record.content.content_type;
  } else if (attribute == "access.type") {
    if (record.access) text = record.access->type;
  } else if (attribute == "last_modified") {
    if (record.content.last_modified) number = seconds_of(*record.content.last_modified);
  } else if (const auto it = record.extensions.find(attribute); it != record.extensions.end()) {
    if (it->second.is_number()) {
      number = it->second.get<double>();
    } else if (it->second.is_string()) {
      text = it->second.get<std::string>();
      if (std::holds_alternative<double>(value)) number = parse_number(*text);
    }
  }
  if (const auto* want = std::get_if<double>(&value)) {
    return number && compare(*number, op, *want);
  }
  return text && compare(*text, op, std::get<std::string>(value));
}

std::string DimensionFilter::to_string() const {
  std::string rendered;
  if (const auto* number = std::get_if<double>(&value)) {
    rendered = JsonValue(*number).dump();
    if (rendered.size() > 2 && rendered.ends_with(".0")) rendered.resize(rendered.size() - 2);
  } else {
    rendered = std::get<std::string>(value);
  }
  return attribute + " " + std::string(mma::to_string(op)) + " " + rendered;
}

// --- consensus -------------------------------------------------------------

std::optional<JsonValue> consensus(const std::vector<JsonValue>& values,
                                   const ConsensusPolicy& policy) {
  if (values.empty() || policy.k == 0) return std::nullopt;
  if (values.front().is_number()) {
    std::vector<double> v;
    for (const auto& value : values) {
      if (value.is_number()) v.push_back(value.get<double>());
    }
    std::sort(v.begin(), v.end());
    // Absorb representation error so 0.24 and 0.25 count as 0.01 apart.
    const double width = policy.epsilon + 1e-9;
    std::size_t best_start = 0, best_len = 0;
    for (std::size_t i = 0, j = 0; i < v.size(); ++i) {
      if (j < i) j = i;
      while (j + 1 < v.size() && v[j + 1] - v[i] <= width) ++j;
      if (j - i + 1 > best_len) {
        best_start = i;
        best_len = j - i + 1;
      }
    }
    if (best_len < policy.k) return std::nullopt;
    const std::size_t mid = best_start + best_len / 2;
    const double median = best_len % 2 ? v[mid] : (v[mid - 1] + v[mid]) / 2.0;
    return JsonValue(median);
  }
  std::map<std::string, std::size_t> counts;
  for (const auto& value : values) {
    if (value.is_string()) ++counts[value.get<std::string>()];
  }
  const std::pair<const std::string, std::size_t>* best = nullptr;
  for (const auto& entry : counts) {
    if (!best || entry.second > best->second) best = &entry;
  }
  if (!best || best->second < policy.k) return std::nullopt;
  return JsonValue(best->first);
}

std::map<std::string, DerivedAttribute> default_derived_attributes() {
  return {{"damage", DerivedAttribute{true, 0.0, 1.0}}};
}

// --- cache -------------------------------------------------------------------

EnrichmentCache::EnrichmentCache(ConsensusPolicy policy,
                                 std::map<std::string, DerivedAttribute> attributes)
    : policy_(policy), attributes_(std::move(attributes)) {}

std::optional<CacheEntry> EnrichmentCache::get(std::string_view uri_m) const {
  std::shared_lock lock(mu_);
  const auto it = entries_.find(cache_key(uri_m));
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::size_t EnrichmentCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

void EnrichmentCache::put_content(std::string_view uri_m, const ContentAttrs& content,
                                  Clock::time_point at) {
  std::unique_lock lock(mu_);
  auto& entry = entries_[cache_key(uri_m)];
  entry.content = content;
  entry.fetched_at = at;
}

void EnrichmentCache::put_derived(std::string_view uri_m, const std::string& attribute,
                                  const JsonValue& value) {
  std::unique_lock lock(mu_);
  entries_[cache_key(uri_m)].derived[attribute] = value;
}

EnrichmentCache::Submission EnrichmentCache::submit(std::string_view uri_m,
                                                    const std::string& attribute,
                                                    const JsonValue& value,
                                                    const std::string& submitter) {
  Submission result;
  const auto spec = attributes_.find(attribute);
  if (spec == attributes_.end()) {
    result.state = SubmissionState::rejected;
    result.reason = "attribute '" + attribute + "' is not registered";
    return result;
  }
  if (spec->second.numeric) {
    if (!value.is_number() || value.get<double>() < spec->second.min ||
        value.get<double>() > spec->second.max) {
      result.state = SubmissionState::rejected;
      result.reason = attribute + " must be a number in [" + JsonValue(spec->second.min).dump() +
                      ", " + JsonValue(spec->second.max).dump() + "]";
      return result;
    }
  } else if (!value.is_string()) {
    result.state = SubmissionState::rejected;
    result.reason = attribute + " must be a string";
    return result;
  }

  std::unique_lock lock(mu_);
  const std::string key = cache_key(uri_m);
  auto& votes = pending_[{key, attribute}];
  votes[submitter] = value;
  std::vector<JsonValue> values;
  for (const auto& [who, v] : votes) values.push_back(v);
  result.accepted = consensus(values, policy_);
  if (result.accepted) {
    result.state = SubmissionState::accepted;
    entries_[key].derived[attribute] = *result.accepted;
  }
  return result;
}

void EnrichmentCache::overlay(MementoRecord& record) const {
  std::shared_lock lock(mu_);
  const auto it = entries_.find(cache_key(record.uri_m));
  if (it == entries_.end()) return;
  const auto& entry = it->second;
  if (entry.content.status_code) record.content.status_code = entry.content.status_code;
  if (entry.content.content_type) record.content.content_type = entry.content.content_type;
  if (entry.content.last_modified) record.content.last_modified = entry.content.last_modified;
  for (const auto& [name, value] : entry.derived) {
    if (name == "damage" && value.is_number()) {
      record.damage = value.get<double>();
    } else {
      record.extensions[name] = value;
    }
  }
}

// --- task pool -----------------------------------------------------------------

TaskPool::TaskPool(std::size_t workers) {
  for (std::size_t i = 0; i < std::max<std::size_t>(1, workers); ++i) {
    threads_.emplace_back([this] { run(); });
  }
}

TaskPool::~TaskPool() {
  {
    std::lock_guard lock(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void TaskPool::post(std::function<void()> task) {
  {
    std::lock_guard lock(mu_);
    queue_.push_back(std::move(task));
  }
  cv_.notify_one();
}

void TaskPool::drain() {
  std::unique_lock lock(mu_);
  idle_cv_.wait(lock, [this] { return queue_.empty() && running_ == 0; });
}

void TaskPool::run() {
  for (;;) {
    std::function<void()> task;
    {
      std::unique_lock lock(mu_);
      cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
      if (queue_.empty()) return;
      task = std::move(queue_.front());
      queue_.pop_front();
      ++running_;
    }
    try {
      task();
    } catch (const std::exception& e) {
      log::logger()->warn("background task failed: {}", e.what());
    }
    {
      std::lock_guard lock(mu_);
      --running_;
    }
    idle_cv_.notify_all();
  }
}

// --- enrichment fetch ----------------------------------------------------------

std::optional<ContentAttrs> fetch_content_attrs(const SourceClient& client, std::string_view uri_m,
                                                std::chrono::milliseconds timeout) {
  if (!is_absolute_http_uri(uri_m)) {
    throw ValidationError("not an HTTP URI-M: " + std::string(uri_m));
  }
  FetchRequest request;
  request.method = "HEAD";
  request.url = std::string(uri_m);
  request.timeout = timeout;
  FetchResponse response = client.fetch(request);
  if (response.failure == FetchResponse::Failure::none && response.status == 405) {
    request.method = "GET";
    response = client.fetch(request);
  }
  if (response.failure != FetchResponse::Failure::none) return std::nullopt;

  ContentAttrs attrs;
  attrs.status_code = response.status;
  if (auto type = response.headers.get("Content-Type"); type && !type->empty()) {
    attrs.content_type = trim(*type);
  }
  if (const auto modified = response.headers.get("Last-Modified")) {
    try {
      attrs.last_modified = MementoDatetime::from_rfc1123(trim(*modified));
    } catch (const ValidationError&) {
    }
  }
  return attrs;
}

// --- config --------------------------------------------------------------------

StarGateConfig stargate_config_from_json(const JsonValue& doc) {
  StarGateConfig config;
  try {
    config.self_id = doc.value("self_id", config.self_id);
    if (doc.contains("listen")) {
      parse_listen(doc.at("listen").get<std::string>(), config.listen_host, config.listen_port);
    }
    config.upstream = doc.at("upstream").get<std::string>();
    config.timeout = std::chrono::milliseconds(doc.value("timeout_ms", 5000));
    if (doc.contains("consensus")) {
      config.consensus.k = doc["consensus"].value("k", config.consensus.k);
      config.consensus.epsilon = doc["consensus"].value("epsilon", config.consensus.epsilon);
    }
    if (doc.contains("derived")) {
      for (const auto& [name, spec] : doc["derived"].items()) {
        DerivedAttribute attr;
        attr.numeric = spec.value("type", std::string("number")) == "number";
        attr.min = spec.value("min", -1e300);
        attr.max = spec.value("max", 1e300);
        config.derived[name] = attr;
      }
    }
    for (const auto& name : doc.value("extensions", JsonValue::array())) {
      config.extensions.insert(name.get<std::string>());
    }
    config.workers = doc.value("workers", config.workers);
    config.log_path = doc.value("log", std::string());
  } catch (const JsonValue::exception& e) {
    throw ConfigError(std::string("bad stargate config: ") + e.what());
  }
  if (!is_absolute_http_uri(SourceDescriptor{"u", SourceKind::meta_aggregator, Visibility::public_,
                                             config.upstream, std::nullopt, false}
                                .timemap_url("http://example.org/"))) {
    throw ConfigError("stargate upstream must be an absolute http(s) URI");
  }
  if (config.consensus.k == 0) throw ConfigError("consensus k must be positive");
  return config;
}

// --- service -------------------------------------------------------------------

StarGateService::StarGateService(StarGateConfig config, std::shared_ptr<const SourceClient> client)
    : config_(std::move(config)),
      client_(std::move(client)),
      cache_(config_.consensus, config_.derived),
      pool_(config_.workers) {
  replay_log();
}

StarGateService::~StarGateService() { pool_.drain(); }

bool StarGateService::registered(std::string_view uri_m) const {
  std::lock_guard lock(registry_mu_);
  return registered_.count(cache_key(uri_m)) > 0;
}

http::Response StarGateService::handle(const http::Request& request) {
  const std::string_view target = request.target;
  if (request.method == "POST") {
    if (target.starts_with("/enrich/")) return submit_derived(target.substr(8), request.body);
    return http::text_response(405, "method not allowed\n");
  }
  if (request.method != "GET" && request.method != "HEAD") {
    return http::text_response(405, "method not allowed\n");
  }
  if (target.starts_with("/stargate/")) {
    return negotiate(uri_r_from_target(target.substr(10)), request.headers);
  }
  if (target.starts_with("/calculate/")) return proxy_redirect(target.substr(11));
  if (target.starts_with("/timemap/")) {
    const auto rest = target.substr(9);
    const auto slash = rest.find('/');
    if (slash != std::string_view::npos) {
      return enriched_timemap(rest.substr(0, slash), uri_r_from_target(rest.substr(slash + 1)),
                              request.headers);
    }
  }
  return http::text_response(404, "not found\n");
}

StarGateService::Upstream StarGateService::fetch_upstream(const OriginalUri& uri_r,
                                                          const http::Headers& headers) {
  Upstream out;
  const SourceDescriptor upstream{"upstream", SourceKind::meta_aggregator, Visibility::public_,
                                  config_.upstream, std::nullopt, false};
  FetchRequest request;
  request.url = upstream.timemap_url(uri_r.value());
  request.timeout = config_.timeout;
  request.headers.add("Accept", "text/x-cdxj");
  for (const char* name : {"Authorization", "X-Archive-Token", "X-More-Archives", "X-MMA-Via"}) {
    for (const auto& value : headers.get_all(name)) request.headers.add(name, value);
  }
  for (const auto& profile : preference_values(parse_prefer(headers), "profile")) {
    request.headers.add("Prefer", format_preference("profile", profile));
  }

  const FetchResponse response = client_->fetch(request);
  if (response.failure != FetchResponse::Failure::none) {
    out.failure = http::text_response(response.failure == FetchResponse::Failure::timeout ? 504 : 502,
                                      "upstream aggregator unavailable\n");
    return out;
  }
  if (response.status == 401 || response.status == 508) {
    // Relay the challenge (or loop refusal) as-is.
    http::Response relayed = http::text_response(response.status, response.body,
                                                 response.headers.get("Content-Type").value_or("text/plain"));
    for (const char* name : {"WWW-Authenticate", "Link"}) {
      for (const auto& value : response.headers.get_all(name)) relayed.headers.add(name, value);
    }
    out.failure = std::move(relayed);
    return out;
  }
  if (response.status == 404) {
    out.timemap.original = uri_r;
    return out;
  }
  if (response.status != 200) {
    out.failure = http::text_response(502, "upstream answered " + std::to_string(response.status) + "\n");
    return out;
  }
  try {
    out.timemap = parse_by_media_type(response.headers.get("Content-Type").value_or(""),
                                      response.body, ParseMode::lenient)
                      .timemap;
  } catch (const Error& e) {
    out.failure = http::text_response(502, std::string("upstream TimeMap unreadable: ") + e.what() + "\n");
    return out;
  }
  normalize(out.timemap);
  std::lock_guard lock(registry_mu_);
  for (const auto& record : out.timemap.mementos) registered_.insert(cache_key(record.uri_m));
  return out;
}

http::Response StarGateService::negotiate(std::string_view raw_uri_r, const http::Headers& headers) {
  std::optional<OriginalUri> uri_r;
  try {
    uri_r.emplace(std::string(raw_uri_r));
  } catch (const UriError& e) {
    return http::text_response(400, std::string("malformed URI-R: ") + e.what() + "\n");
  }
  std::optional<MementoDatetime> target;
  if (const auto accept = headers.get("Accept-Datetime")) {
    try {
      target = MementoDatetime::from_rfc1123(*accept);
    } catch (const ValidationError& e) {
      return http::text_response(400, std::string("bad Accept-Datetime: ") + e.what() + "\n");
    }
  }
  const auto prefs = parse_prefer(headers);
  std::vector<DimensionFilter> filters;
  for (const auto& text : preference_values(prefs, "memento-filter")) {
    try {
      filters.push_back(parse_filter(text, config_.extensions));
    } catch (const ValidationError& e) {
      return http::text_response(400, std::string("bad memento-filter: ") + e.what() + "\n");
    }
  }

  auto upstream = fetch_upstream(*uri_r, headers);
  if (upstream.failure) return *upstream.failure;
  TimeMap& tm = upstream.timemap;
  if (tm.mementos.empty()) return http::text_response(404, "no mementos for " + uri_r->value() + "\n");

  const bool enrich = has_preference(prefs, "enriched");
  // A filter on a content attribute can only be answered by looking.
  const bool content_filter = std::any_of(filters.begin(), filters.end(), [](const auto& f) {
    return f.attribute == "status_code" || f.attribute == "content_type" ||
           f.attribute == "last_modified";
  });
  for (auto& record : tm.mementos) {
    if ((enrich || content_filter) && record.content.empty() && !cache_.get(record.uri_m)) {
      enrich_content(record.uri_m);
    }
    cache_.overlay(record);
  }

  std::vector<MementoRecord> candidates;
  for (const auto& record : tm.mementos) {
    if (std::all_of(filters.begin(), filters.end(),
                    [&](const DimensionFilter& f) { return f.matches(record); })) {
      candidates.push_back(record);
    }
  }

  http::Response response;
  if (candidates.empty()) {
    // Reactive negotiation: tell the client what does exist.
    response = http::text_response(406, serialize_json(tm), "application/json");
  } else {
    const auto& chosen = candidates[*select_memento(candidates, target)];
    response = http::text_response(302, "");
    response.headers.set("Location", chosen.uri_m);
    response.headers.add("Link", format_link_value({uri_r->value(), {{"rel", "original"}}}));
    if (const auto timemap = tm.self_uri("link_format")) {
      response.headers.add("Link", format_link_value({*timemap, {{"rel", "timemap"},
                                                                 {"type", "application/link-format"}}}));
    }
    response.headers.add("Link", format_link_value({chosen.uri_m, {{"rel", "memento"},
                                                                   {"datetime", chosen.datetime.to_rfc1123()}}}));
    std::vector<std::string> applied;
    for (const auto& f : filters) applied.push_back(format_preference("memento-filter", f.to_string()));
    if (enrich) applied.push_back("enriched");
    if (!applied.empty()) {
      std::string joined;
      for (const auto& a : applied) joined += (joined.empty() ? "" : ", ") + a;
      response.headers.set("Preference-Applied", joined);
    }
  }
  response.headers.set("Vary", "accept-datetime, prefer");
  return response;
}

http::Response StarGateService::enriched_timemap(std::string_view format_segment,
                                                 std::string_view raw_uri_r,
                                                 const http::Headers& headers) {
  TimeMapFormat format;
  try {
    format = timemap_format_from_string(format_segment);
  } catch (const ValidationError&) {
    return http::text_response(404, "unknown TimeMap format\n");
  }
  std::optional<OriginalUri> uri_r;
  try {
    uri_r.emplace(std::string(raw_uri_r));
  } catch (const UriError& e) {
    return http::text_response(400, std::string("malformed URI-R: ") + e.what() + "\n");
  }
  auto upstream = fetch_upstream(*uri_r, headers);
  if (upstream.failure) return *upstream.failure;
  const bool enrich = has_preference(parse_prefer(headers), "enriched");
  for (auto& record : upstream.timemap.mementos) {
    if (enrich && !record.content.status_code && !cache_.get(record.uri_m)) {
      enrich_content(record.uri_m);
    }
    cache_.overlay(record);
  }
  auto response = http::text_response(200, serialize(upstream.timemap, format),
                                      std::string(media_type(format)));
  if (enrich) response.headers.set("Preference-Applied", "enriched");
  return response;
}

std::optional<ContentAttrs> StarGateService::enrich_content(std::string_view uri_m) {
  const auto attrs = fetch_content_attrs(*client_, uri_m, config_.timeout);
  if (!attrs) {
    log::logger()->info("enrichment of {} failed; will retry on next access", uri_m);
    return std::nullopt;
  }
  const auto now = Clock::now();
  cache_.put_content(uri_m, *attrs, now);
  JsonValue entry;
  entry["type"] = "content";
  entry["uri_m"] = std::string(uri_m);
  if (attrs->status_code) entry["status_code"] = *attrs->status_code;
  if (attrs->content_type) entry["content_type"] = *attrs->content_type;
  if (attrs->last_modified) entry["last_modified"] = attrs->last_modified->to_key();
  entry["fetched_at"] = epoch_seconds(now);
  append_log(entry);
  return attrs;
}

http::Response StarGateService::proxy_redirect(std::string_view uri_m) {
  if (!is_absolute_http_uri(uri_m) || !registered(uri_m)) {
    return http::text_response(404, "unknown URI-M\n");
  }
  const std::string key = cache_key(uri_m);
  bool schedule = false;
  {
    std::lock_guard lock(registry_mu_);
    schedule = !in_flight_.count(key) && !cache_.get(uri_m);
    if (schedule) in_flight_.insert(key);
  }
  if (schedule) {
    pool_.post([this, key, target = std::string(uri_m)] {
      try {
        enrich_content(target);
      } catch (...) {
        std::lock_guard lock(registry_mu_);
        in_flight_.erase(key);
        throw;
      }
      std::lock_guard lock(registry_mu_);
      in_flight_.erase(key);
    });
  }
  auto response = http::text_response(302, "");
  response.headers.set("Location", std::string(uri_m));
  return response;
}

http::Response StarGateService::submit_derived(std::string_view uri_m, std::string_view body) {
  if (!is_absolute_http_uri(uri_m)) return http::text_response(400, "malformed URI-M\n");
  JsonValue doc;
  try {
    doc = JsonValue::parse(body);
  } catch (const JsonValue::parse_error&) {
    return http::text_response(400, "body must be a JSON object\n");
  }
  if (!doc.is_object() || !doc.contains("attribute") || !doc["attribute"].is_string() ||
      !doc.contains("value") || !doc.contains("submitter") || !doc["submitter"].is_string() ||
      doc["submitter"].get<std::string>().empty()) {
    return http::text_response(400, "expected {\"attribute\", \"value\", \"submitter\"}\n");
  }
  const auto attribute = doc["attribute"].get<std::string>();
  const auto before = cache_.get(uri_m);
  const auto result = cache_.submit(uri_m, attribute, doc["value"], doc["submitter"].get<std::string>());

  JsonValue out;
  out["state"] = std::string(to_string(result.state));
  if (result.accepted) out["value"] = *result.accepted;
  if (!result.reason.empty()) out["reason"] = result.reason;

  if (result.state == SubmissionState::accepted) {
    const bool changed = !before || !before->derived.count(attribute) ||
                         before->derived.at(attribute) != *result.accepted;
    if (changed) {
      JsonValue entry;
      entry["type"] = "derived";
      entry["uri_m"] = std::string(uri_m);
      entry["attribute"] = attribute;
      entry["value"] = *result.accepted;
      append_log(entry);
    }
    return json_response(200, out);
  }
  return json_response(result.state == SubmissionState::pending ? 202 : 422, out);
}

void StarGateService::append_log(const JsonValue& entry) {
  if (config_.log_path.empty()) return;
  std::lock_guard lock(log_mu_);
  std::ofstream out(config_.log_path, std::ios::app);
  out << entry.dump() << "\n";
  if (!out) log::logger()->error("cannot append to enrichment log {}", config_.log_path);
}

void StarGateService::replay_log() {
  if (config_.log_path.empty()) return;
  std::ifstream in(config_.log_path);
  std::string line;
  std::size_t n = 0, applied = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const auto entry = JsonValue::parse(line);
      const auto uri_m = entry.at("uri_m").get<std::string>();
      if (entry.at("type") == "content") {
        ContentAttrs attrs;
        if (entry.contains("status_code")) attrs.status_code = entry["status_code"].get<int>();
        if (entry.contains("content_type")) attrs.content_type = entry["content_type"].get<std::string>();
        if (entry.contains("last_modified")) {
          attrs.last_modified = MementoDatetime::from_key(entry["last_modified"].get<std::string>());
        }
        cache_.put_content(uri_m, attrs,
                           Clock::time_point(std::chrono::seconds(entry.value("fetched_at", 0LL))));
      } else if (entry.at("type") == "derived") {
        cache_.put_derived(uri_m, entry.at("attribute").get<std::string>(), entry.at("value"));
      } else {
        continue;
      }
      std::lock_guard lock(registry_mu_);
      registered_.insert(cache_key(uri_m));
      ++applied;
    } catch (const std::exception& e) {
      // A torn final line from a crash is expected; anything else is noise.
      log::logger()->warn("enrichment log {} line {} skipped: {}", config_.log_path, n, e.what());
    }
  }
  if (applied) log::logger()->info("replayed {} enrichment entries", applied);
}

}  // namespace mma
