#include "sympcool/cli.hpp"

int main(int argc, char** argv) { return sympcool::cli::dispatch(argc, argv); }
