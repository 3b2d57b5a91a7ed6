#include "vpatch/cli.hpp"

int main(int argc, char** argv) { return vpatch::runCli(argc, argv); }
