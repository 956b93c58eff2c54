// SPDX-License-Identifier: Apache-2.0
#include "qcl/cli.hpp"

int main(int argc, char** argv) { return qcl::cli_main(argc, argv); }
