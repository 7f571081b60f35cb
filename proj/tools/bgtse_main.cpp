#include "bgtse/cli.hpp"

int main(int argc, char** argv) { return bgtse::run_cli(argc, argv); }
