#include "mma/prefer.hpp"

#include <algorithm>
#include <cctype>

#include "mma/link_header.hpp"

namespace mma {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return std::string(s.substr(first, last - first + 1));
}

std::string unquote(std::string_view s) {
  std::string t = trim(s);
  if (t.size() < 2 || t.front() != '"' || t.back() != '"') return t;
  std::string out;
  for (std::size_t i = 1; i + 1 < t.size(); ++i) {
    if (t[i] == '\\' && i + 2 < t.size()) ++i;
    out += t[i];
  }
  return out;
}

// Splits on `sep` outside quoted strings.
std::vector<std::string> split_outside_quotes(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (quoted && c == '\\' && i + 1 < s.size()) {
      current += c;
      current += s[++i];
      continue;
    }
    if (c == '"') quoted = !quoted;
    if (c == sep && !quoted) {
      out.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  out.push_back(current);
  return out;
}

std::pair<std::string, std::string> name_value(std::string_view item) {
  const std::string t = trim(item);
  std::size_t eq = std::string::npos;
  bool quoted = false;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == '"') quoted = !quoted;
    if (t[i] == '=' && !quoted) {
      eq = i;
      break;
    }
  }
  std::string name = trim(std::string_view(t).substr(0, eq));
  std::transform(name.begin(), name.end(), name.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  std::string value = eq == std::string::npos ? std::string() : unquote(t.substr(eq + 1));
  return {std::move(name), std::move(value)};
}

}  // namespace

std::vector<Preference> parse_prefer(const http::Headers& headers) {
  std::vector<Preference> out;
  for (const auto& header : headers.get_all("Prefer")) {
    for (const auto& item : http::split_list(header)) {
      const auto pieces = split_outside_quotes(item, ';');
      auto [name, value] = name_value(pieces.front());
      if (name.empty()) continue;
      Preference pref{std::move(name), std::move(value), {}};
      for (std::size_t i = 1; i < pieces.size(); ++i) {
        auto param = name_value(pieces[i]);
        if (!param.first.empty()) pref.params.push_back(std::move(param));
      }
      out.push_back(std::move(pref));
    }
  }
  return out;
}

std::vector<std::string> preference_values(const std::vector<Preference>& prefs,
                                           std::string_view name) {
  std::vector<std::string> out;
  for (const auto& p : prefs) {
    if (p.name == name) out.push_back(p.value);
  }
  return out;
}

bool has_preference(const std::vector<Preference>& prefs, std::string_view name) {
  return std::any_of(prefs.begin(), prefs.end(), [&](const auto& p) { return p.name == name; });
}

std::string format_preference(std::string_view name, std::string_view value) {
  return std::string(name) + "=" + quote_string(value);
}

}  // namespace mma
