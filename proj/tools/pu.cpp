#include "pu/cli.hpp"

int main(int argc, char** argv) { return pu::cli_main(argc, argv); }
