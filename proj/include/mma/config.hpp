#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mma/model.hpp"
#include "mma/precedence.hpp"

namespace mma {

// Meta-aggregator configuration. File form (JSON):
//
//   {
//     "self_id": "MMA_alice",
//     "listen": "127.0.0.1:1208",
//     "public_base": "http://mma.example",          (optional)
//     "timeout_ms": 5000,
//     "depth_limit": 8,
//     "sources": [
//       {"id": "A", "kind": "archive", "visibility": "private",
//        "timemap": "http://127.0.0.1:9001/timemap/cdxj/",
//        "auth": "http://127.0.0.1:9100/"}
//     ],
//     "rules": [{"match": "facebook.com", "sources": ["A", "B", "C"]}]
//   }
struct ServiceConfig {
  std::string self_id;
  std::string listen_host = "127.0.0.1";
  int listen_port = 1208;
  std::optional<std::string> public_base;
  std::vector<SourceDescriptor> sources;
  std::vector<FilterRule> rules;
  std::chrono::milliseconds timeout{5000};
  std::size_t depth_limit = 8;

  // Throws ConfigError on duplicate ids, a self_id that collides with a
  // source, or rules naming unknown sources.
  void validate() const;
};

ServiceConfig service_config_from_json(const JsonValue& doc);
ServiceConfig load_service_config(const std::string& path);

SourceDescriptor source_from_json(const JsonValue& item);
FilterRule rule_from_json(const JsonValue& item);

// "host:port" or ":port" or "port"; throws ConfigError.
void parse_listen(const std::string& text, std::string& host, int& port);

JsonValue read_json_file(const std::string& path);

}  // namespace mma
