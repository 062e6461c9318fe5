#include "backchain/cli.hpp"

int main(int argc, char** argv) { return backchain::run_cli(argc, argv); }
