#include "gnsch/cli.hpp"

int main(int argc, char** argv) { return gnsch::cli_main(argc, argv); }
