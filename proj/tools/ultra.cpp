#include <iostream>
#include <string>
#include <vector>

#include "ultra/cli.hpp"

int main(int argc, char** argv) {
  return ultra::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
