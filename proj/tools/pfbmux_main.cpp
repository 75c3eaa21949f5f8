// SPDX-License-Identifier: Apache-2.0
#include <iostream>

#include "pfbmux/cli.hpp"

int main(int argc, char** argv) { return pfbmux::cli::run_cli(argc, argv, std::cout, std::cerr); }
