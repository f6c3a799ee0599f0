#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qlss {

/// Batch front-end. Returns the process exit status; errors are emitted as
/// one machine-readable JSON object on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qlss
