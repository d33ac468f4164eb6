#include "sagp/cli.hpp"

int main(int argc, char** argv) { return sagp::cli_main(argc, argv); }
