#pragma once

namespace vpatch {

/// Entry point of the vpatch command line tool.  Returns the process exit
/// status: 0 when every criterion of the subcommand passes, 1 on a failed
/// criterion or a numerical abort, 2 on usage or configuration errors.
int runCli(int argc, char** argv);

}  // namespace vpatch
