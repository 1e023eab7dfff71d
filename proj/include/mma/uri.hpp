#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace mma {

// Components of an absolute http(s) URI. Produced by split_uri; no
// normalization is applied.
struct UriParts {
  std::string scheme;
  std::string userinfo;
  std::string host;
  std::optional<std::string> port;
  std::string path;
  std::optional<std::string> query;
  std::optional<std::string> fragment;
};

// Throws UriError naming the offending byte offset.
UriParts split_uri(std::string_view raw);

// An original live-Web URI (URI-R). value() is the text as supplied (after
// validation); canonical() is the comparison form.
class OriginalUri {
 public:
  // Validates `raw` as an absolute http(s) URI; throws UriError.
  explicit OriginalUri(std::string raw);

  const std::string& value() const noexcept { return value_; }
  const std::string& canonical() const noexcept { return canonical_; }
  // Host of the canonical form, lowercase, no port.
  const std::string& host() const noexcept { return host_; }
  // Path plus query of the canonical form ("/" at minimum).
  std::string path_and_query() const;

  bool same_resource(const OriginalUri& other) const noexcept {
    return canonical_ == other.canonical_;
  }
  friend bool operator==(const OriginalUri&, const OriginalUri&) = default;

 private:
  std::string value_;
  std::string canonical_;
  std::string host_;
};

// Lowercases scheme and host, drops default ports, and gives an empty path
// the root "/". Nothing else is rewritten: "www." and query strings stay.
// The returned OriginalUri has value() == canonical().
OriginalUri canonicalize(std::string_view raw);

// Same rules as canonicalize, returning the string form. Used for URI-M
// identity during deduplication.
std::string canonical_form(std::string_view raw);

bool is_absolute_http_uri(std::string_view raw) noexcept;

}  // namespace mma
