#include "copulagraph/commands.hpp"

int main(int argc, char** argv) { return copulagraph::run_cli(argc, argv); }
