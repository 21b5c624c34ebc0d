#include <iostream>

#include "rpod/cli.hpp"

int main(int argc, char** argv) { return rpod::run_cli(argc, argv, std::cout, std::cerr); }
