#include <iostream>

#include "kccsd/harness.hpp"

int main(int argc, char** argv) {
  return kccsd::run_cli(argc, argv, std::cin, std::cout, std::cerr);
}
