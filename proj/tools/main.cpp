#include <iostream>
#include <string>
#include <vector>

#include "riskrules/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return riskrules::run(args, std::cout, std::cerr);
}
