#include <iostream>

#include "kviff/cli.hpp"

int main(int argc, char** argv) { return kviff::cli::run_cli(argc, argv, std::cout, std::cerr); }
