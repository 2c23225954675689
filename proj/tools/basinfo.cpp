#include <iostream>

#include "basinfo/cli.hpp"

int main(int argc, char** argv) { return basinfo::cli_dispatch(argc, argv, std::cout, std::cerr); }
