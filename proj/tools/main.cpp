#include <iostream>

#include "timesynth/cli.hpp"

int main(int argc, char** argv) { return timesynth::run_cli(argc, argv, std::cout, std::cerr); }
