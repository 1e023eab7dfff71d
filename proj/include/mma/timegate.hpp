#pragma once

#include <optional>
#include <vector>

#include "mma/model.hpp"

namespace mma {

// Index of the memento nearest `target` (ties go to the earlier memento), or
// of the most recent memento when no target is given. nullopt when empty.
// `mementos` must be sorted by datetime.
std::optional<std::size_t> select_memento(const std::vector<MementoRecord>& mementos,
                                          const std::optional<MementoDatetime>& target);

}  // namespace mma
