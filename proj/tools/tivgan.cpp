// SPDX-License-Identifier: Apache-2.0
#include "tivgan/cli/commands.hpp"

int main(int argc, char** argv) { return tivgan::cli::run(argc, argv); }
