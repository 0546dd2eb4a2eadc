#include <fxbem/cli.hpp>

int main(int argc, char** argv) { return fxbem::cli::run(argc, argv); }
