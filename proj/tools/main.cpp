#include <iostream>

#include "zonempc/cli.hpp"

int main(int argc, char** argv) { return zonempc::run_cli(argc, argv, std::cout, std::cerr); }
