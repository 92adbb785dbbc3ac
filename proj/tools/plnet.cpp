#include "plnet_cli.hpp"

auto main(int argc, char** argv) -> int { return plnet::cli::run_cli(argc, argv); }
