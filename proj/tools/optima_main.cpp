#include "optima/cli.hpp"

int main(int argc, char** argv) { return optima::run_cli(argc, argv); }
