#include <charconv>
#include <map>
#include <set>

#include "mma/codec.hpp"
#include "mma/errors.hpp"
#include "mma/link_header.hpp"

namespace mma {
namespace {

std::string format_number(double value) { return JsonValue(value).dump(); }

std::optional<std::string> format_key_for_type(std::string_view type) {
  if (type == "application/link-format") return "link_format";
  if (type == "application/json") return "json_format";
  if (type == "text/x-cdxj" || type == "application/cdxj+ors") return "cdxj_format";
  return std::nullopt;
}

std::string_view type_for_format_key(std::string_view key) {
  if (key == "json_format") return "application/json";
  if (key == "cdxj_format") return "text/x-cdxj";
  return "application/link-format";
}

int parse_int(const std::string& s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError("not an integer: '" + s + "'", 0);
  }
  return value;
}

double parse_real(const std::string& s) {
  try {
    const JsonValue v = JsonValue::parse(s);
    if (v.is_number()) return v.get<double>();
  } catch (const JsonValue::parse_error&) {
  }
  throw ParseError("not a number: '" + s + "'", 0);
}

MementoRecord record_from_link(const LinkValue& link) {
  MementoRecord record;
  record.uri_m = link.target;
  const auto datetime = link.param("datetime");
  if (!datetime) throw ParseError("memento link lacks datetime: " + link.target, 0);
  try {
    record.datetime = MementoDatetime::from_rfc1123(*datetime);
    for (const auto& [name, value] : link.params) {
      if (name == "rel" || name == "datetime") continue;
      if (name == "status_code") {
        record.content.status_code = parse_int(value);
      } else if (name == "content_type") {
        record.content.content_type = value;
      } else if (name == "last_modified") {
        record.content.last_modified = MementoDatetime::from_rfc1123(value);
      } else if (name == "damage") {
        record.damage = parse_real(value);
      } else {
        record.extensions[name] = value;
      }
    }
    validate_record(record);
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), 0);
  }
  return record;
}

}  // namespace

std::string serialize_link(const TimeMap& tm) {
  std::vector<std::string> values;
  if (tm.original) {
    values.push_back(format_link_value({tm.original->value(), {{"rel", "original"}}}));
  }
  for (const auto& [key, uri] : tm.self_uris) {
    const std::string rel = key == "link_format" ? "self" : "timemap";
    values.push_back(
        format_link_value({uri, {{"rel", rel}, {"type", std::string(type_for_format_key(key))}}}));
  }
  if (tm.timegate_uri) {
    values.push_back(format_link_value({*tm.timegate_uri, {{"rel", "timegate"}}}));
  }
  for (const auto& record : tm.mementos) {
    LinkValue link{record.uri_m,
                   {{"rel", record.rel}, {"datetime", record.datetime.to_rfc1123()}}};
    std::map<std::string, std::string> attrs;
    for (const auto& [name, value] : record.extensions) {
      attrs[name] = value.is_string() ? value.get<std::string>() : value.dump();
    }
    attrs.erase("access");
    if (record.content.status_code) attrs["status_code"] = std::to_string(*record.content.status_code);
    if (record.content.content_type) attrs["content_type"] = *record.content.content_type;
    if (record.content.last_modified) attrs["last_modified"] = record.content.last_modified->to_rfc1123();
    if (record.damage) attrs["damage"] = format_number(*record.damage);
    for (auto& [name, value] : attrs) link.params.emplace_back(name, std::move(value));
    values.push_back(format_link_value(link));
  }

  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out += values[i];
    out += i + 1 < values.size() ? ",\n" : "\n";
  }
  return out;
}

ParseOutcome parse_link(std::string_view text, ParseMode mode) {
  const bool lenient = mode == ParseMode::lenient;
  ParseOutcome out;
  LinkParseResult parsed = parse_link_values(text, lenient);
  for (const auto offset : parsed.skipped_offsets) {
    out.warnings.push_back({0, "unparseable link-value at offset " + std::to_string(offset)});
  }

  std::set<std::string> seen_uris;
  TimeMap& tm = out.timemap;
  for (const auto& link : parsed.links) {
    try {
      if (link.has_rel("memento") || link.has_rel("first") || link.has_rel("last")) {
        MementoRecord record = record_from_link(link);
        if (!seen_uris.insert(record.uri_m).second) {
          throw ParseError("duplicate memento URI " + record.uri_m, 0);
        }
        tm.mementos.push_back(std::move(record));
      } else if (link.has_rel("original")) {
        tm.original = OriginalUri(link.target);
      } else if (link.has_rel("timegate")) {
        tm.timegate_uri = link.target;
      } else if (link.has_rel("self") || link.has_rel("timemap")) {
        const auto key = format_key_for_type(link.param("type").value_or("application/link-format"));
        if (key && !tm.self_uri(*key)) tm.self_uris.emplace_back(*key, link.target);
      }
    } catch (const Error& e) {
      if (!lenient) throw ParseError(e.what(), 0);
      out.warnings.push_back({0, e.what()});
    }
  }
  normalize(tm);
  return out;
}

}  // namespace mma
