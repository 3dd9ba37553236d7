#include "commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return emrl::cli::dispatch(argc, argv, std::cout, std::cerr); }
