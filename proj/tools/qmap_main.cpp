#include <iostream>
#include <string>
#include <vector>

#include "qmap/io.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return qmap::run_command(args, std::cout, std::cerr);
}
