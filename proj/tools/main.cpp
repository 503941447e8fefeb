#include "cli.hpp"

int main(int argc, char** argv) { return ecolab::cli::cli_main(argc, argv); }
