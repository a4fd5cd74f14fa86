#include <iostream>

#include "asianlv/cli.hpp"

int main(int argc, char** argv) {
  return asianlv::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
