#include "lpforge/cli.hpp"

int main(int argc, char** argv) { return lpforge::cli::run_cli(argc, argv); }
