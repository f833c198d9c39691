#include "stiffid/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return stiffid::cli::run(argc, argv, std::cout, std::cerr); }
