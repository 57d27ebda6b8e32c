#include "smoothq/cli.hpp"

int main(int argc, char** argv) { return smoothq::cli_main(argc, argv); }
