#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace fisher {

/// Entry point of the fisher-solve tool. args[0] is the program name.
/// Returns 0 on success, 1 on solver or I/O failure, 2 on bad usage.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fisher
