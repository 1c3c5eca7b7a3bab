// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace voxtrack {

/// Entry point behind the voxtrack binary: subcommands simulate, track,
/// evaluate, report. Returns 0 on success, 1 on usage errors, 2 on data
/// errors.
int run_cli(int argc, const char* const* argv);

}  // namespace voxtrack
