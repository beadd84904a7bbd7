#pragma once

namespace hear {

// Entry point behind the `hear` binary; exposed so integration tests can
// drive the CLI in-process. Returns the process exit status.
int cli_main(int argc, const char* const* argv);

} // namespace hear
