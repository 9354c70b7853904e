#include "jcc/cli.hpp"

int main(int argc, char** argv) { return jcc::cli::dispatch(argc, argv); }
