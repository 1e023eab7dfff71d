#include "mma/codec.hpp"

#include <algorithm>
#include <cctype>

#include "mma/errors.hpp"

namespace mma {

std::string_view to_string(TimeMapFormat format) noexcept {
  switch (format) {
    case TimeMapFormat::link: return "link";
    case TimeMapFormat::json: return "json";
    case TimeMapFormat::cdxj: return "cdxj";
  }
  return "link";
}

std::string_view media_type(TimeMapFormat format) noexcept {
  switch (format) {
    case TimeMapFormat::link: return "application/link-format";
    case TimeMapFormat::json: return "application/json";
    case TimeMapFormat::cdxj: return "text/x-cdxj";
  }
  return "application/link-format";
}

std::string_view self_uri_key(TimeMapFormat format) noexcept {
  switch (format) {
    case TimeMapFormat::link: return "link_format";
    case TimeMapFormat::json: return "json_format";
    case TimeMapFormat::cdxj: return "cdxj_format";
  }
  return "link_format";
}

TimeMapFormat timemap_format_from_string(std::string_view s) {
  if (s == "link") return TimeMapFormat::link;
  if (s == "json") return TimeMapFormat::json;
  if (s == "cdxj") return TimeMapFormat::cdxj;
  throw ValidationError("unknown TimeMap format: " + std::string(s));
}

std::string serialize(const TimeMap& tm, TimeMapFormat format) {
  switch (format) {
    case TimeMapFormat::link: return serialize_link(tm);
    case TimeMapFormat::json: return serialize_json(tm);
    case TimeMapFormat::cdxj: return serialize_cdxj(tm);
  }
  return serialize_link(tm);
}

ParseOutcome parse(std::string_view text, TimeMapFormat format, ParseMode mode) {
  switch (format) {
    case TimeMapFormat::link: return parse_link(text, mode);
    case TimeMapFormat::json: return parse_json(text, mode);
    case TimeMapFormat::cdxj: return parse_cdxj(text, mode);
  }
  return parse_link(text, mode);
}

ParseOutcome parse_by_media_type(std::string_view content_type, std::string_view body,
                                 ParseMode mode) {
  std::string type(content_type.substr(0, content_type.find(';')));
  std::transform(type.begin(), type.end(), type.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  type.erase(std::remove_if(type.begin(), type.end(),
                            [](unsigned char c) { return std::isspace(c); }),
             type.end());
  if (type == "text/x-cdxj" || type == "application/cdxj+ors") return parse_cdxj(body, mode);
  if (type == "application/json") return parse_json(body, mode);
  if (type == "application/link-format") return parse_link(body, mode);

  const auto first = body.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return ParseOutcome{};
  switch (body[first]) {
    case '!': return parse_cdxj(body, mode);
    case '{': return parse_json(body, mode);
    case '<': return parse_link(body, mode);
    default:
      if (std::isdigit(static_cast<unsigned char>(body[first]))) return parse_cdxj(body, mode);
      throw ParseError("unrecognized TimeMap media type: " + std::string(content_type), 0);
  }
}

std::string dump_inline(const JsonValue& value) {
  if (value.is_object()) {
    std::string out = "{";
    bool first = true;
    for (const auto& [key, item] : value.items()) {
      if (!first) out += ", ";
      first = false;
      out += JsonValue(key).dump();
      out += ": ";
      out += dump_inline(item);
    }
    return out + "}";
  }
  if (value.is_array()) {
    std::string out = "[";
    bool first = true;
    for (const auto& item : value) {
      if (!first) out += ", ";
      first = false;
      out += dump_inline(item);
    }
    return out + "]";
  }
  return value.dump();
}

}  // namespace mma
