#include <iostream>
#include <string>
#include <vector>

#include "fld/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return fld::run_cli(args, std::cout, std::cerr);
}
