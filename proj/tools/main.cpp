#include <iostream>

#include "rmab/cli.hpp"

int main(int argc, char** argv) { return rmab::cli::main(argc, argv, std::cout, std::cerr); }
