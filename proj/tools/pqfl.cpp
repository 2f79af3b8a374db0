#include <iostream>

#include "pqfl/cli.hpp"

int main(int argc, char** argv) { return pqfl::run_cli(argc, argv, std::cout, std::cerr); }
