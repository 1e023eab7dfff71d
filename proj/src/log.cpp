#include "mma/log.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>

namespace mma::log {

std::shared_ptr<spdlog::logger> logger() {
  static const auto instance = [] {
    auto l = spdlog::stderr_color_mt("mma");
    l->set_level(spdlog::level::info);
    return l;
  }();
  return instance;
}

void set_sink(spdlog::sink_ptr sink) {
  auto l = logger();
  l->sinks().clear();
  l->sinks().push_back(std::move(sink));
}

}  // namespace mma::log
