#pragma once

#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/ostream_sink.h>

#include "mma/log.hpp"

namespace mma::testing {

// Routes the process logger into a buffer at trace level for the lifetime of
// the object, then restores the previous sinks and level.
class LogCapture {
 public:
  LogCapture() : saved_(log::logger()->sinks()), level_(log::logger()->level()) {
    log::set_sink(std::make_shared<spdlog::sinks::ostream_sink_mt>(buffer_));
    log::logger()->set_level(spdlog::level::trace);
  }
  ~LogCapture() {
    auto l = log::logger();
    l->sinks() = saved_;
    l->set_level(level_);
  }
  LogCapture(const LogCapture&) = delete;
  LogCapture& operator=(const LogCapture&) = delete;

  std::string text() const { return buffer_.str(); }

 private:
  std::ostringstream buffer_;
  std::vector<spdlog::sink_ptr> saved_;
  spdlog::level::level_enum level_;
};

}  // namespace mma::testing
