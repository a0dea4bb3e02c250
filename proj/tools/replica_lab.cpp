#include "replica_lab/cli.hpp"

int main(int argc, char** argv) { return replica_lab::cli::run(argc, argv); }
