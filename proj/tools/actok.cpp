#include <iostream>

#include "actok/cli.hpp"

int main(int argc, char** argv) { return actok::cli::run(argc, argv, std::cout, std::cerr); }
