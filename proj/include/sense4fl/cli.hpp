#pragma once

namespace sense4fl::cli {

// Full command-line entry point, callable from tests.
// Exit codes: 0 success, 2 input validation, 3 infeasibility,
// 4 invariant violation during an oracle sweep.
int run(int argc, const char* const* argv);

}  // namespace sense4fl::cli
