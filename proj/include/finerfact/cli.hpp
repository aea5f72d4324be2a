#pragma once

#include <string>
#include <vector>

namespace finerfact {

// Entry point shared by the binary and the integration tests.
// Exit status: 0 success, 1 module error, 2 usage error.
int run_command(const std::vector<std::string>& args);

}  // namespace finerfact
