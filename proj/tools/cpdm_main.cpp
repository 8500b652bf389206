#include "cpdm/cli.hpp"

int main(int argc, char** argv) { return cpdm::cli_main(argc, argv); }
