#include <iostream>

#include "ergorate/cli.hpp"

int main(int argc, char** argv) { return ergorate::cli::run(argc, argv, std::cout, std::cerr); }
