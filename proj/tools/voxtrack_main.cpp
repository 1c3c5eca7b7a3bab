// SPDX-License-Identifier: Apache-2.0
#include <voxtrack/cli.hpp>

int main(int argc, char** argv) { return voxtrack::run_cli(argc, argv); }
