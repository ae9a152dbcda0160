#include <iostream>
#include <string>
#include <vector>

#include "rsadp/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return rsadp::run_cli(args, std::cout, std::cerr);
}
