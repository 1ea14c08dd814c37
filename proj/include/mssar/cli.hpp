#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mssar {

// Entry point of the `mssar` tool. args excludes the program name.
// Returns 0 on success, 1 on a runtime failure and 2 on a usage error.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mssar
