#include <iostream>

#include "vkcone/cli.hpp"

int main(int argc, char** argv) { return vkcone::run_cli(argc, argv, std::cout, std::cerr); }
