#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace depsev {

// ─── Command line ───────────────────────────────────────────────────────────
//
// In-process entry point behind the depsev binary; args excludes the program
// name. Exit status: 0 success, 1 rejected input or configuration, 2 failure
// during an otherwise valid run.

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace depsev
