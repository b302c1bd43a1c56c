#include <iostream>

#include "rydberg/cli.hpp"

int main(int argc, char** argv) {
    return rydberg::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
