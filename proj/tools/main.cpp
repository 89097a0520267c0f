// SPDX-License-Identifier: MIT
#include <iostream>
#include <string>
#include <vector>

#include "sntf/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return sntf::cli::run(args, std::cout, std::cerr);
}
