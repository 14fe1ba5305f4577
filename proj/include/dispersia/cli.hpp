#pragma once

namespace dispersia {

// Full command-line entry point (subcommands region, local-disp,
// blocklength, simulate, sv-set). Returns the process exit code:
// 0 success, 2 invalid input, 3 nonconvergence or a resource guard.
// The DISPERSIA_THREADS environment variable caps grid parallelism; output
// row order always follows input grid order.
int run_cli(int argc, const char* const* argv);

} // namespace dispersia
