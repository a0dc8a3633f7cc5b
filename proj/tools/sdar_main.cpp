#include "cli_commands.hpp"

int main(int argc, char** argv) { return sdar::cli::run_cli(argc, argv); }
