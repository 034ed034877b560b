#include "tomoscope/cli.hpp"

int main(int argc, char** argv) { return tomo::cli_main(argc, argv); }
