#pragma once

#include <cstddef>

#include "mma/model.hpp"

namespace mma::detail {

// uri, rel, datetime, then enrichment and extension attributes by name.
JsonValue record_to_object(const MementoRecord& record, bool include_access = true);

// Throws ParseError carrying `line`.
MementoRecord record_from_object(const JsonValue& object, std::size_t line);

}  // namespace mma::detail
