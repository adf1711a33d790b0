#include <iostream>

#include "mllmsent/cli.hpp"

int main(int argc, char** argv) { return mllmsent::cli::run(argc, argv, std::cout, std::cerr); }
