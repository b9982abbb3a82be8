#include <iostream>

#include "samosa/cli.hpp"

int main(int argc, char** argv) { return samosa::cli_main(argc, argv, std::cout, std::cerr); }
