#include "rbt/cli.hpp"

int main(int argc, char** argv) { return rbt::cli::main(argc, argv); }
