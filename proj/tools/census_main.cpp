#include "census/cli.hpp"

int main(int argc, char** argv) { return census::cli_main(argc, argv); }
