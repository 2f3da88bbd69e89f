#include "scbm/cli.hpp"

int main(int argc, char** argv) { return scbm::cli::run(argc, argv); }
