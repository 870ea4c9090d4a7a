#pragma once

// Deterministic text formatting shared by every CSV/JSON writer.

#include <charconv>
#include <string>

namespace sympcool::io {

/// Shortest round-trip representation; "nan"/"inf" for non-finite values.
inline std::string format_number(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return ec == std::errc{} ? std::string(buf, end) : std::string{"nan"};
}

inline std::string format_bool(bool b) { return b ? "1" : "0"; }

}  // namespace sympcool::io
