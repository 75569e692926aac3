#include <iostream>

#include "wolbachia/cli.hpp"

int main(int argc, char** argv) {
    return wolbachia::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
