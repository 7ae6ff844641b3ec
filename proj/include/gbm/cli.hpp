#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gbm {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// Subcommands: preprocess, augment, fuse, evaluate, report. args excludes
// the program name. Returns 0 on success, 1 on usage errors, 2 on data
// errors (message on err with file/case context).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace gbm
