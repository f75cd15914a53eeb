#include <iostream>

#include "typeline/cli.hpp"

int main(int argc, char** argv) { return typeline::cli::run_cli(argc, argv, std::cout, std::cerr); }
