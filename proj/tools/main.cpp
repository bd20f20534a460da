#include "orl/cli.hpp"

int main(int argc, char** argv) { return orl::cli::run_cli(argc, argv); }
