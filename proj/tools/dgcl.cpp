#include <iostream>

#include "dgcl/cli.hpp"

int main(int argc, char** argv) { return dgcl::cli::run_cli(argc, argv, std::cout, std::cerr); }
