#include "netspill/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return netspill::run_cli(argc, argv, std::cout, std::cerr); }
