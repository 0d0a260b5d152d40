#include <iostream>

#include "herdtrack/cli.hpp"

int main(int argc, char** argv) {
  return herdtrack::cli::main(argc, argv, std::cout, std::cerr);
}
