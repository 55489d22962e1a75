#include <iostream>

#include "stacktag/cli.hpp"

int main(int argc, char** argv) {
  return stacktag::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
