#include "vcsp/cli.hpp"

int main(int argc, char** argv) { return vcsp::run_cli(argc, argv); }
