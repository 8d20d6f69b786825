#include <iostream>

#include "kdvstab/cli.hpp"

int main(int argc, char** argv) { return kdvstab::run_cli(argc, argv, std::cout, std::cerr); }
