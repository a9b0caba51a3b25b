#include <iostream>

#include "denscoint/cli.hpp"

int main(int argc, char** argv) { return denscoint::run_cli(argc, argv, std::cout, std::cerr); }
