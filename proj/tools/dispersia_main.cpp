#include "dispersia/cli.hpp"

int main(int argc, char** argv) { return dispersia::run_cli(argc, argv); }
