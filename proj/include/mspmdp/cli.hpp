#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mspmdp {

// Front end behind the mspmdp binary. Returns the process exit code:
// 0 success, 1 reproduction failure, 2 usage error.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mspmdp
