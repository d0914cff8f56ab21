#include <iostream>

#include "nvtrap/cli.hpp"

int main(int argc, char** argv) { return nvtrap::cli::dispatch(argc, argv, std::cout, std::cerr); }
