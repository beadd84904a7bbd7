#include "hear/cli.hpp"

int main(int argc, char** argv) { return hear::cli_main(argc, argv); }
