#include <iostream>

#include "rssiloc/commands.hpp"

int main(int argc, char** argv) {
  return rssiloc::run_cli(argc, argv, std::cout, std::cerr);
}
