#include "cli.hpp"

int main(int argc, char** argv) { return isbpol::cli::run(argc, argv); }
