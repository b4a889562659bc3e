#include <iostream>
#include <string>
#include <vector>

#include "rcpolicy/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return rcpolicy::run(args, std::cout, std::cerr);
}
