#include <iostream>
#include <string>
#include <vector>

#include "dtp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dtp::cli::cli_dispatch(args, std::cout, std::cerr);
}
