#include <iostream>

#include "ivg/cli.hpp"

int main(int argc, char** argv) { return ivg::run_cli(argc, argv, std::cout, std::cerr); }
