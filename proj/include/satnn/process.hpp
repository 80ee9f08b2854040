#pragma once

#include <chrono>
#include <string>
#include <vector>

namespace satnn {

struct ProcessOutcome {
    bool timed_out = false;
    int exit_code = -1; // -1 when killed by a signal
    std::string stdout_text;
    double wall_seconds = 0.0;
};

/// Runs argv[0] (looked up in PATH) with stdout captured and stderr
/// discarded. The child is killed with SIGKILL once `timeout` elapses.
/// Throws EnvironmentError when the executable cannot be started.
ProcessOutcome run_process(const std::vector<std::string>& argv, std::chrono::milliseconds timeout);

} // namespace satnn
