#include "lucifer/cli.hpp"

int main(int argc, char** argv) { return lucifer::cli_main(argc, argv); }
