#include "combinterp/cli.hpp"

int main(int argc, char** argv) { return combinterp::cli::run_cli(argc, argv); }
