#include "taxonav/cli.hpp"

int main(int argc, char** argv) { return taxonav::run_command(argc, argv); }
