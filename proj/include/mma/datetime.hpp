#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace mma {

// A memento datetime: a UTC instant at whole-second precision. Two textual
// forms are supported, the 14-digit CDXJ key (YYYYMMDDhhmmss) and RFC 1123
// ("Sat, 12 Dec 1998 01:39:21 GMT"). Both parse strictly: sub-second
// fractions, impossible calendar dates and mismatched weekdays are rejected
// with ValidationError.
class MementoDatetime {
 public:
  using Seconds = std::chrono::sys_seconds;

  MementoDatetime() = default;
  explicit MementoDatetime(Seconds instant) noexcept : instant_(instant) {}

  static MementoDatetime from_key(std::string_view key14);
  static MementoDatetime from_rfc1123(std::string_view text);

  std::string to_key() const;
  std::string to_rfc1123() const;

  Seconds instant() const noexcept { return instant_; }

  friend auto operator<=>(const MementoDatetime&, const MementoDatetime&) = default;

 private:
  Seconds instant_{};
};

// 14-digit key to RFC 1123; throws ValidationError.
std::string key_to_rfc1123(std::string_view key14);

}  // namespace mma
