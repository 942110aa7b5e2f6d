#include "lyapobs/cli/runner.hpp"

#include <iostream>

int main(int argc, char** argv) { return lyapobs::cli::cli_main(argc, argv, std::cout, std::cerr); }
