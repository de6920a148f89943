// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace sdq::cli {

/// Runs the `sdq` command line. `args` excludes the program name. The
/// machine-readable report goes to `out` (or to --report), the human summary
/// and diagnostics to `err`. Returns the process exit code.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sdq::cli
