#include "powermat/cli.hpp"

int main(int argc, char** argv) { return powermat::cli_main(argc, argv); }
