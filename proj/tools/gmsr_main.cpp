#include "gmsr/cli.hpp"

int main(int argc, char** argv) { return gmsr::run_command(argc, argv); }
