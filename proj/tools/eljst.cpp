#include <iostream>

#include "eljst/cli.hpp"

int main(int argc, char** argv) { return eljst::cli::run(argc, argv, std::cout, std::cerr); }
