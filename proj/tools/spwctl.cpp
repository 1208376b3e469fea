#include <iostream>
#include <string>
#include <vector>

#include "spw/service/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return spw::svc::run_cli(args, std::cout, std::cerr, &std::cin);
}
