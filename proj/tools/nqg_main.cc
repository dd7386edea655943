#include "nqg/cli.h"

int main(int argc, char** argv) { return nqg::run_cli(argc, argv); }
