#include "mma/uri.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "mma/errors.hpp"

namespace mma {
namespace {

bool is_forbidden(unsigned char c) {
  return c <= 0x20 || c == 0x7f || c == '<' || c == '>' || c == '"';
}

bool is_host_char(unsigned char c) {
  if (std::isalnum(c) || c >= 0x80) return true;
  switch (c) {
    case '-': case '.': case '_': case '~': case '%':
    case '!': case '$': case '&': case '\'': case '(': case ')':
    case '*': case '+': case ',': case ';': case '=':
      return true;
    default:
      return false;
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string join(const UriParts& p) {
  std::string out = lower(p.scheme) + "://";
  if (!p.userinfo.empty()) out += p.userinfo + "@";
  out += lower(p.host);
  const std::string scheme = lower(p.scheme);
  if (p.port && !p.port->empty()) {
    const bool is_default = (scheme == "http" && *p.port == "80") ||
                            (scheme == "https" && *p.port == "443");
    if (!is_default) out += ":" + *p.port;
  }
  out += p.path.empty() ? "/" : p.path;
  if (p.query) out += "?" + *p.query;
  if (p.fragment) out += "#" + *p.fragment;
  return out;
}

}  // namespace

UriParts split_uri(std::string_view raw) {
  if (raw.empty()) throw UriError("empty URI", 0);
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (is_forbidden(static_cast<unsigned char>(raw[i]))) {
      throw UriError("forbidden character in URI", i);
    }
  }

  UriParts parts;
  std::size_t i = 0;
  if (!std::isalpha(static_cast<unsigned char>(raw[0]))) {
    throw UriError("URI scheme must start with a letter", 0);
  }
  while (i < raw.size() && raw[i] != ':') {
    const unsigned char c = raw[i];
    if (!std::isalnum(c) && c != '+' && c != '-' && c != '.') {
      throw UriError("invalid character in URI scheme", i);
    }
    ++i;
  }
  if (i == raw.size()) throw UriError("missing scheme delimiter ':'", i);
  parts.scheme = std::string(raw.substr(0, i));
  const std::string scheme = lower(parts.scheme);
  if (scheme != "http" && scheme != "https") {
    throw UriError("scheme is not http or https", 0);
  }
  ++i;
  if (raw.substr(i, 2) != "//") throw UriError("expected '//' after scheme", i);
  i += 2;

  const std::size_t authority_start = i;
  const std::size_t authority_end =
      std::min(raw.size(), raw.find_first_of("/?#", authority_start));
  std::string_view authority =
      raw.substr(authority_start, authority_end - authority_start);
  std::size_t host_start = authority_start;
  if (const auto at = authority.rfind('@'); at != std::string_view::npos) {
    parts.userinfo = std::string(authority.substr(0, at));
    host_start = authority_start + at + 1;
  }

  std::size_t port_colon = std::string_view::npos;
  std::size_t host_end = authority_end;
  if (host_start < authority_end && raw[host_start] == '[') {
    const auto close = raw.find(']', host_start);
    if (close == std::string_view::npos || close >= authority_end) {
      throw UriError("unterminated IPv6 literal", host_start);
    }
    host_end = close + 1;
    if (host_end < authority_end) {
      if (raw[host_end] != ':') throw UriError("unexpected character after IPv6 literal", host_end);
      port_colon = host_end;
    }
  } else {
    for (std::size_t j = host_start; j < authority_end; ++j) {
      if (raw[j] == ':') {
        port_colon = j;
        host_end = j;
        break;
      }
      if (!is_host_char(static_cast<unsigned char>(raw[j]))) {
        throw UriError("invalid character in host", j);
      }
    }
  }
  if (host_end == host_start) throw UriError("empty host", host_start);
  parts.host = std::string(raw.substr(host_start, host_end - host_start));

  if (port_colon != std::string_view::npos) {
    std::string_view port = raw.substr(port_colon + 1, authority_end - port_colon - 1);
    for (std::size_t j = 0; j < port.size(); ++j) {
      if (!std::isdigit(static_cast<unsigned char>(port[j]))) {
        throw UriError("non-digit in port", port_colon + 1 + j);
      }
    }
    if (!port.empty()) {
      unsigned value = 0;
      auto [ptr, ec] = std::from_chars(port.data(), port.data() + port.size(), value);
      if (ec != std::errc() || value > 65535) throw UriError("port out of range", port_colon + 1);
      parts.port = std::to_string(value);
    } else {
      parts.port = std::string();
    }
  }

  i = authority_end;
  const std::size_t path_end = std::min(raw.size(), raw.find_first_of("?#", i));
  parts.path = std::string(raw.substr(i, path_end - i));
  i = path_end;
  if (i < raw.size() && raw[i] == '?') {
    const std::size_t query_end = std::min(raw.size(), raw.find('#', i));
    parts.query = std::string(raw.substr(i + 1, query_end - i - 1));
    i = query_end;
  }
  if (i < raw.size() && raw[i] == '#') parts.fragment = std::string(raw.substr(i + 1));
  return parts;
}

OriginalUri::OriginalUri(std::string raw) : value_(std::move(raw)) {
  const UriParts parts = split_uri(value_);
  canonical_ = join(parts);
  host_ = lower(parts.host);
}

std::string OriginalUri::path_and_query() const {
  const UriParts parts = split_uri(canonical_);
  return parts.path + (parts.query ? "?" + *parts.query : std::string());
}

OriginalUri canonicalize(std::string_view raw) {
  return OriginalUri(canonical_form(raw));
}

std::string canonical_form(std::string_view raw) { return join(split_uri(raw)); }

bool is_absolute_http_uri(std::string_view raw) noexcept {
  try {
    split_uri(raw);
    return true;
  } catch (const UriError&) {
    return false;
  }
}

}  // namespace mma
