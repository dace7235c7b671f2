#include <iostream>

#include "genlab/cli.hpp"

int main(int argc, char** argv) { return genlab::cli::run(argc, argv, std::cout, std::cerr); }
