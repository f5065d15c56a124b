/// @file main.cpp
/// @brief Entry point of the lfg command-line tool.
#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv) { return lfg::cli::run(argc, argv, std::cout, std::cerr); }
