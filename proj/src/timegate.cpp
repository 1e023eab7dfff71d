#include "mma/timegate.hpp"

#include <algorithm>

namespace mma {

std::optional<std::size_t> select_memento(const std::vector<MementoRecord>& mementos,
                                          const std::optional<MementoDatetime>& target) {
  if (mementos.empty()) return std::nullopt;
  if (!target) return mementos.size() - 1;
  // First memento at or after the target; its predecessor is the closest
  // earlier candidate.
  const auto it = std::lower_bound(
      mementos.begin(), mementos.end(), *target,
      [](const MementoRecord& r, const MementoDatetime& t) { return r.datetime < t; });
  const auto after = static_cast<std::size_t>(it - mementos.begin());
  // Within a run of equal datetimes the first listed wins.
  auto run_start = [&](std::size_t i) {
    while (i > 0 && mementos[i - 1].datetime == mementos[i].datetime) --i;
    return i;
  };
  if (after == mementos.size()) return run_start(mementos.size() - 1);
  if (after == 0) return 0;
  const auto before = after - 1;
  const auto gap_before = target->instant() - mementos[before].datetime.instant();
  const auto gap_after = mementos[after].datetime.instant() - target->instant();
  return gap_before <= gap_after ? run_start(before) : after;
}

}  // namespace mma
