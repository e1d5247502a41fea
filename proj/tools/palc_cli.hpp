#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace palc {

inline constexpr const char* kVersion = "palc 1.0.0 (schema 1)";

/// Runs the command line with the given arguments (argv[0] included).
/// Returns the process exit code: 0 success, 1 domain error, 2 I/O or parse
/// error (usage errors included).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace palc
