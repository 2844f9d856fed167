#include "slev/cli.hpp"

int main(int argc, char** argv) { return slev::cli::run(argc, argv); }
