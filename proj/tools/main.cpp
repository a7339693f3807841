#include "cli.hpp"

int main(int argc, char** argv) { return netsumm::cli_main(argc, argv); }
