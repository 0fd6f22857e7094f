#include <iostream>
#include <string>
#include <vector>

#include "halo/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return halo::cli::run_command(args, std::cout, std::cerr);
}
