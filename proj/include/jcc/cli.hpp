#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jcc::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode { kOk = 0, kUsage = 1, kDataError = 2, kInfeasible = 3, kInternal = 4 };

/// Runs one command. `args` excludes the program name. Data goes to `out` (or files under --out),
/// diagnostics to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int dispatch(int argc, char** argv);

}  // namespace jcc::cli
