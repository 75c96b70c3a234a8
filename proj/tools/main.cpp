#include <iostream>
#include <string>
#include <vector>

#include "hilreg/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return hilreg::run_cli(args, std::cout, std::cerr);
}
