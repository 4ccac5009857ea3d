#include "ringnet/cli.hpp"

int main(int argc, char** argv) { return ringnet::cli_main(argc, argv); }
