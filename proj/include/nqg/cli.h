#ifndef NQG_CLI_H
#define NQG_CLI_H

namespace nqg {

// Entry point behind the `nqg` binary. Exit codes: 0 success, 1
// computation error, 2 input/usage error.
int run_cli(int argc, const char* const* argv);

}  // namespace nqg

#endif
