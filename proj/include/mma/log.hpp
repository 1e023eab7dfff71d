#pragma once

#include <memory>

#include <spdlog/spdlog.h>

namespace mma::log {

// Process-wide logger ("mma"). Secrets (tokens, credentials) must never be
// passed to it.
std::shared_ptr<spdlog::logger> logger();

// Replaces the logger's sinks; used by tests to capture output.
void set_sink(spdlog::sink_ptr sink);

}  // namespace mma::log
