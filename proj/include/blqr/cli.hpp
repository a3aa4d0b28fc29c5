#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace blqr {

// Command-line entry point. `args` excludes the program name. Returns the
// process exit code (0 ok, 1 usage/config, 2 data, 3 numeric/internal);
// diagnostics go to `err` with an `ERROR:<class>:` prefix.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace blqr
