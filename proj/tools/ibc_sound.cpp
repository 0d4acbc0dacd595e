#include "cli_app.hpp"

int main(int argc, char** argv) { return ibc::cli::run_cli(argc, argv); }
