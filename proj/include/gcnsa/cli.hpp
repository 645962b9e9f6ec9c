#pragma once

namespace gcnsa {

// Full command-line entry point. Exit codes: 0 success, 1 usage/config,
// 2 data error, 3 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace gcnsa
