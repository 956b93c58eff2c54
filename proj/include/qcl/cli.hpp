// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace qcl {

/// Entry point behind the qcl binary; callable in-process for tests.
/// Exit codes: 0 success, 1 runtime failure or failed checks, 2 usage.
int cli_main(int argc, const char* const* argv);

}  // namespace qcl
