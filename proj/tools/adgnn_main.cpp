#include "adgnn/cli.hpp"

int main(int argc, char** argv) { return adgnn::run_cli(argc, argv); }
