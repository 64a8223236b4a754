#include <iostream>

#include "te/cli.hpp"

int main(int argc, char** argv) { return te::cli::run(argc, argv, std::cout, std::cerr); }
