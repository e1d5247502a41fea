#include <iostream>

#include "palc_cli.hpp"

int main(int argc, char** argv) {
  return palc::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
