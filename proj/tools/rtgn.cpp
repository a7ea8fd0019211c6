#include <iostream>

#include "rtgn/cli.hpp"

int main(int argc, char** argv) { return rtgn::cli::run(argc, argv, std::cout, std::cerr); }
