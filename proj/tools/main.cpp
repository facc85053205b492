#include "cli.hpp"

int main(int argc, char** argv) { return memroi::cli_main(argc, argv); }
