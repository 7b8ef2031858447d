#include <iostream>

#include "dtn/cli.hpp"

int main(int argc, char** argv) {
  return dtn::run_cli(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
