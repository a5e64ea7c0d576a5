#include "wavescatter/cli.hpp"

int main(int argc, char** argv) { return wavescatter::cli::main(argc, argv); }
