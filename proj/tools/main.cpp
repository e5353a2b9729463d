#include "optoskin/cli.hpp"

int main(int argc, char** argv) { return optoskin::run_cli(argc, argv); }
