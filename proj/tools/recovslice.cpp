#include <iostream>

#include "recov/cli.hpp"

int main(int argc, char** argv) { return recov::run_cli(argc, argv, std::cout, std::cerr); }
