#include "mvlaf/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mvlaf::cli::Run(argc, argv, std::cout, std::cerr); }
