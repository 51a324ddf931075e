#pragma once

#include <iosfwd>

namespace arq::cli {

/// Runs one `arq` invocation. Returns the process exit status; diagnostics go
/// to `err`, summaries to `out`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace arq::cli
