#include <iostream>

#include "delaychain/app/commands.hpp"

int main(int argc, char** argv) {
  return delaychain::app::run_cli(argc, argv, std::cout, std::cerr);
}
