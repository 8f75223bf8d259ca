#include "fatigue/cli.hpp"

int main(int argc, char** argv) { return fatigue::cli_main(argc, argv); }
