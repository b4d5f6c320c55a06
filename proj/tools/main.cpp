#include <iostream>

#include "fmgspo/cli.hpp"

int main(int argc, char** argv) { return fmgspo::cli::main(argc, argv, std::cout, std::cerr); }
