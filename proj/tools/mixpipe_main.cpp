#include "mixpipe/cli.hpp"

int main(int argc, char** argv) { return mixpipe::run_cli(argc, argv); }
