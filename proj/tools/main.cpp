#include "conelrt/cli.hpp"

int main(int argc, char** argv) { return conelrt::cli::parse_and_run(argc, argv); }
