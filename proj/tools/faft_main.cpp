#include <iostream>

#include "faft/cli.hpp"

int main(int argc, char** argv) { return faft::cli::run(argc, argv, std::cout, std::cerr); }
