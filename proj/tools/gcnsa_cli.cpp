#include "gcnsa/cli.hpp"

int main(int argc, char** argv) { return gcnsa::run_cli(argc, argv); }
