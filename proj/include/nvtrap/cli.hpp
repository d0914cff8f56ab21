#ifndef NVTRAP_CLI_HPP
#define NVTRAP_CLI_HPP

#include <ostream>

namespace nvtrap::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 1;
inline constexpr int exit_runtime = 2;

// Entry point of the `nvtrap` tool. Usage problems and configuration errors
// return exit_config before anything is written; failures while running a
// protocol return exit_runtime.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nvtrap::cli

#endif
