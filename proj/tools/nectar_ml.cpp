#include "nectar/cli.hpp"

int main(int argc, char** argv) { return nectar::cli::main(argc, argv); }
