#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace census {

/// Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
int cli_main(int argc, char** argv);

/// `args` excludes the program name. Interactive review reads from `in`.
int cli_main(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace census
