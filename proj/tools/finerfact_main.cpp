#include <vector>

#include "finerfact/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return finerfact::run_command(args);
}
