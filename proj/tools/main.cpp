#include <iostream>
#include <string>
#include <vector>

#include "lodaykit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lk::runCli(args, std::cout, std::cerr);
}
