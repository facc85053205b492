#pragma once

namespace memroi {

// Entry point of the `memroi` binary; returns the process exit code.
int cli_main(int argc, char** argv);

}  // namespace memroi
