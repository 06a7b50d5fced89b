#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace surgesim {

inline constexpr std::string_view kVersion = "0.1.0";

/// FNV-1a 64-bit hash, used to stamp output files with a stable config fingerprint.
[[nodiscard]] inline std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

[[nodiscard]] inline std::string fnv1a64_hex(std::string_view data) {
    static const char* digits = "0123456789abcdef";
    std::uint64_t h = fnv1a64(data);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

} // namespace surgesim
