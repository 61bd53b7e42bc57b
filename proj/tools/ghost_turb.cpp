#include <iostream>
#include <string>
#include <vector>

#include "ghostturb/commands.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ghostturb::run_cli(args, std::cout, std::cerr);
}
