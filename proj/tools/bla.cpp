#include <iostream>

#include "bla/cli/app.hpp"

int main(int argc, char** argv) {
  return bla::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
