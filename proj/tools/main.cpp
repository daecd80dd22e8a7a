#include <iostream>
#include <string>
#include <vector>

#include "centraprune/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return centraprune::cli::dispatch(args, std::cout, std::cerr);
}
