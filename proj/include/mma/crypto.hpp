#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace mma::crypto {

// Hex of `bytes` random bytes from the OS CSPRNG.
std::string random_hex(std::size_t bytes);

// Hex BLAKE2b-256 of `data`, optionally keyed (key may be empty).
std::string blake2b_hex(std::string_view data, std::string_view key = {});

// Length-independent comparison time for equal-length inputs.
bool constant_time_equal(std::string_view a, std::string_view b) noexcept;

// Label carried in access.type for token digests.
inline constexpr std::string_view kTokenDigestType = "Blake2b";

}  // namespace mma::crypto
