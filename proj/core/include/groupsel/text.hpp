#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace groupsel {

// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite values.
std::string format_number(double v);

// FNV-1a 64-bit, printed as 16 hex digits by hash_hex.
std::uint64_t fnv1a(std::string_view bytes);
std::string hash_hex(std::uint64_t h);

}  // namespace groupsel
