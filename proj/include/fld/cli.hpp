#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace fld {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

// Runs the command line tool. `args` excludes the program name. Reports go
// to `out` unless --out is given; diagnostics always go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace fld
