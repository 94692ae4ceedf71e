#include "cli.hpp"

int main(int argc, char** argv) { return cfgevade::cli::run(argc, argv); }
