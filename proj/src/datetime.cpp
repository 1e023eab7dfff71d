#include "mma/datetime.hpp"

#include <array>
#include <cctype>
#include <cstdio>

#include "mma/errors.hpp"

namespace mma {
namespace {

using namespace std::chrono;

constexpr std::array<std::string_view, 7> kWeekdays = {"Sun", "Mon", "Tue", "Wed",
                                                       "Thu", "Fri", "Sat"};
constexpr std::array<std::string_view, 12> kMonths = {"Jan", "Feb", "Mar", "Apr",
                                                      "May", "Jun", "Jul", "Aug",
                                                      "Sep", "Oct", "Nov", "Dec"};

int digits(std::string_view s, std::size_t pos, std::size_t n) {
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (i >= s.size() || !std::isdigit(static_cast<unsigned char>(s[i]))) {
      throw ValidationError("expected digit at position " + std::to_string(i) +
                            " in '" + std::string(s) + "'");
    }
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

sys_seconds make_instant(int y, int mo, int d, int h, int mi, int s) {
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw ValidationError("impossible calendar date");
  if (h > 23 || mi > 59 || s > 59) throw ValidationError("time of day out of range");
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

}  // namespace

MementoDatetime MementoDatetime::from_key(std::string_view key) {
  if (key.size() != 14) {
    throw ValidationError("datetime key must be exactly 14 digits: '" + std::string(key) + "'");
  }
  return MementoDatetime(make_instant(digits(key, 0, 4), digits(key, 4, 2),
                                      digits(key, 6, 2), digits(key, 8, 2),
                                      digits(key, 10, 2), digits(key, 12, 2)));
}

MementoDatetime MementoDatetime::from_rfc1123(std::string_view text) {
  // Www, DD Mon YYYY hh:mm:ss GMT
  if (text.size() != 29 || text.substr(3, 2) != ", " || text[7] != ' ' ||
      text[11] != ' ' || text[16] != ' ' || text[19] != ':' || text[22] != ':' ||
      text.substr(25) != " GMT") {
    throw ValidationError("not an RFC 1123 GMT datetime: '" + std::string(text) + "'");
  }
  int month_index = -1;
  for (std::size_t m = 0; m < kMonths.size(); ++m) {
    if (text.substr(8, 3) == kMonths[m]) month_index = static_cast<int>(m);
  }
  if (month_index < 0) throw ValidationError("unknown month in '" + std::string(text) + "'");
  const auto instant = make_instant(digits(text, 12, 4), month_index + 1, digits(text, 5, 2),
                                    digits(text, 17, 2), digits(text, 20, 2),
                                    digits(text, 23, 2));
  const weekday wd{floor<days>(instant)};
  if (text.substr(0, 3) != kWeekdays[wd.c_encoding()]) {
    throw ValidationError("weekday does not match date in '" + std::string(text) + "'");
  }
  return MementoDatetime(instant);
}

std::string MementoDatetime::to_key() const {
  const auto day_point = floor<days>(instant_);
  const year_month_day ymd{day_point};
  const hh_mm_ss tod{instant_ - day_point};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d%02u%02u%02d%02d%02d", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

std::string MementoDatetime::to_rfc1123() const {
  const auto day_point = floor<days>(instant_);
  const year_month_day ymd{day_point};
  const weekday wd{day_point};
  const hh_mm_ss tod{instant_ - day_point};
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%s, %02u %s %04d %02d:%02d:%02d GMT",
                std::string(kWeekdays[wd.c_encoding()]).c_str(),
                static_cast<unsigned>(ymd.day()),
                std::string(kMonths[static_cast<unsigned>(ymd.month()) - 1]).c_str(),
                static_cast<int>(ymd.year()), static_cast<int>(tod.hours().count()),
                static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

std::string key_to_rfc1123(std::string_view key14) {
  return MementoDatetime::from_key(key14).to_rfc1123();
}

}  // namespace mma
