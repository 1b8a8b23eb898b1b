#include <iostream>

#include "shapelab/commands.hpp"

int main(int argc, char** argv) { return shapelab::commands::run(argc, argv, std::cout, std::cerr); }
