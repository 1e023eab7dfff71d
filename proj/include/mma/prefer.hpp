#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mma/http_types.hpp"

namespace mma {

// One RFC 7240 preference: `name[=value] *( ; param[=value] )`.
struct Preference {
  std::string name;  // lowercased
  std::string value;
  std::vector<std::pair<std::string, std::string>> params;
};

// All preferences across every Prefer header, in order. Malformed entries
// are dropped, as RFC 7240 asks servers to ignore what they cannot parse.
std::vector<Preference> parse_prefer(const http::Headers& headers);

// Values of every preference called `name`.
std::vector<std::string> preference_values(const std::vector<Preference>& prefs,
                                           std::string_view name);
bool has_preference(const std::vector<Preference>& prefs, std::string_view name);

// `name="value"` as written in Prefer / Preference-Applied.
std::string format_preference(std::string_view name, std::string_view value);

}  // namespace mma
