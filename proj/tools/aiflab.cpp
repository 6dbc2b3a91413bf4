#include <iostream>
#include <string>
#include <vector>

#include "aiflab/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return aiflab::dispatch(args, std::cout, std::cerr);
}
