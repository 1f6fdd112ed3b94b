#include <iostream>
#include <string>
#include <vector>

#include "dlpp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dlpp::run_cli(args, std::cout, std::cerr);
}
