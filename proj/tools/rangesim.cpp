// SPDX-License-Identifier: Apache-2.0

#include <iostream>

#include "rangesim/cli.hpp"

int main(int argc, char** argv) {
  return rangesim::cli::main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
