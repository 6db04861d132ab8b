#include "storeboard/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return storeboard::run_cli(argc, argv, std::cout, std::cerr); }
