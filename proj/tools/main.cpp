#include "pdtkit/cli.hpp"

int main(int argc, char** argv) { return pdtkit::cli::run_cli(argc, argv); }
