#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mma/model.hpp"

namespace mma {

// Strict parsing throws ParseError on the first defect. Lenient parsing skips
// defective entries and reports them as warnings.
enum class ParseMode { strict, lenient };

struct ParseWarning {
  std::size_t line = 0;  // 1-based; 0 when not line-oriented
  std::string message;
};

struct ParseOutcome {
  TimeMap timemap;
  std::vector<ParseWarning> warnings;
};

enum class TimeMapFormat { link, json, cdxj };

std::string_view to_string(TimeMapFormat format) noexcept;
std::string_view media_type(TimeMapFormat format) noexcept;
// Key used in the timemap_uri meta object, e.g. "link_format".
std::string_view self_uri_key(TimeMapFormat format) noexcept;
// Accepts "link", "json", "cdxj"; throws ValidationError otherwise.
TimeMapFormat timemap_format_from_string(std::string_view s);

// CDXJ: `!directive payload` lines, then `YYYYMMDDhhmmss {payload}` lines.
ParseOutcome parse_cdxj(std::string_view text, ParseMode mode = ParseMode::strict);
std::string serialize_cdxj(const TimeMap& tm);

// RFC 8288 link-value list. Access attributes are never written.
ParseOutcome parse_link(std::string_view text, ParseMode mode = ParseMode::strict);
std::string serialize_link(const TimeMap& tm);

ParseOutcome parse_json(std::string_view text, ParseMode mode = ParseMode::strict);
std::string serialize_json(const TimeMap& tm);

std::string serialize(const TimeMap& tm, TimeMapFormat format);
ParseOutcome parse(std::string_view text, TimeMapFormat format,
                   ParseMode mode = ParseMode::strict);

// Picks a parser from a Content-Type value, falling back to sniffing the body.
ParseOutcome parse_by_media_type(std::string_view content_type, std::string_view body,
                                 ParseMode mode = ParseMode::lenient);

// Single-line JSON with ", " and ": " separators and insertion-ordered keys,
// the object notation used in CDXJ payloads.
std::string dump_inline(const JsonValue& value);

}  // namespace mma
