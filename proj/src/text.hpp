#pragma once

#include <charconv>
#include <string>

namespace jcc::detail {

/// Shortest round-trip decimal form of v. Negative zero prints as 0.
inline std::string num(double v) {
    if (v == 0.0) v = 0.0;
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace jcc::detail
