#pragma once

namespace adgnn {

// Entry point of the adgnn binary. Returns the process exit code:
// 0 success, 1 usage/config error, 2 data error, 3 numeric failure.
int run_cli(int argc, char** argv);

}  // namespace adgnn
