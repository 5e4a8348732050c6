#include <iostream>

#include "tpfilm/cli.hpp"

int main(int argc, char** argv) { return tpfilm::run_cli(argc, argv, std::cout, std::cerr); }
