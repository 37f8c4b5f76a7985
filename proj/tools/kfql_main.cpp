#include "kfql/cli.hpp"

int main(int argc, char** argv) { return kfql::cli::main_entry(argc, argv); }
