#include "disc/cli.hpp"

int main(int argc, char** argv) { return disc::cli_main(argc, argv); }
