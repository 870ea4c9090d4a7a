#pragma once
// Command-line front end: `sympcool <command> [options]`.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace sympcool::cli {

inline constexpr std::string_view tool_version = "0.1.0";

int dispatch(int argc, const char* const* argv);
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(std::string_view data);

}  // namespace sympcool::cli
