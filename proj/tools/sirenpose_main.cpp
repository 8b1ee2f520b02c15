#include <iostream>
#include <string>
#include <vector>

#include "sirenpose/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return sirenpose::cli_main(args, std::cout, std::cerr);
}
