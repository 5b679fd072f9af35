#include <iostream>
#include <string>
#include <vector>

#include "deshell/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return deshell::cli::run(args, std::cout, std::cerr);
}
