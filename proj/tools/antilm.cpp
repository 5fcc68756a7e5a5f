#include "antilm/cli.hpp"

int main(int argc, char** argv) { return antilm::run_cli(argc, argv); }
