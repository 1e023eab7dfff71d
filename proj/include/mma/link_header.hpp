#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mma {

// One RFC 8288 link-value: `<target>; name="value"; ...`.
struct LinkValue {
  std::string target;
  // Parameter names are lowercased on parse; values are unquoted.
  std::vector<std::pair<std::string, std::string>> params;

  std::optional<std::string> param(std::string_view name) const;
  // Space-separated relation types of the "rel" parameter, lowercased.
  std::vector<std::string> rels() const;
  bool has_rel(std::string_view rel) const;
};

struct LinkParseResult {
  std::vector<LinkValue> links;
  // Offsets of link-values that were skipped in lenient mode.
  std::vector<std::size_t> skipped_offsets;
};

// Parses a comma-separated link-value list. With lenient=false the first
// malformed link-value throws ParseError; otherwise it is skipped and parsing
// resumes at the next link-value.
LinkParseResult parse_link_values(std::string_view text, bool lenient);

// `<target>; a="b"; c="d"`. Values are always written as quoted strings.
std::string format_link_value(const LinkValue& link);

std::string quote_string(std::string_view value);

}  // namespace mma
