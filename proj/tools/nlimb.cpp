#include <iostream>

#include "nlimb/harness/cli.hpp"

int main(int argc, char** argv) {
  return nlimb::cli_main(argc, argv, std::cout, std::cerr);
}
