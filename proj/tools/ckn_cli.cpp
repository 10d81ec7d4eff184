#include "ckn/cli.hpp"

int main(int argc, char** argv) { return ckn::cli::run(argc, argv); }
