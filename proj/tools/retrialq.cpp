#include <iostream>

#include "retrial/cli.hpp"

int main(int argc, char** argv) { return retrial::cli::run(argc, argv, std::cout, std::cerr); }
