#include "covnet/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return covnet::run_cli(argc, argv, std::cout, std::cerr); }
