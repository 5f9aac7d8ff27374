#include <iostream>

#include "mutopt/cli.hpp"

int main(int argc, char** argv) {
  return mutopt::cli::run_cli(argc, argv, std::cout, std::cerr);
}
