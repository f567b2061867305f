#ifndef RBK_CLI_HPP
#define RBK_CLI_HPP

#include <string>
#include <vector>

namespace rbk::cli {

enum ExitCode : int
{
    ok = 0,
    usage = 1,
    config_error = 2,
    numeric_failure = 3,
    check_failure = 4
};

/// Entry point of the `rbk` tool: run | check | sweep | mc-compare | validate-kernel.
int main(int argc, char** argv);
int main(const std::vector<std::string>& args);

} // namespace rbk::cli

#endif
