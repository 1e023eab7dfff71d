#pragma once

#include <chrono>
#include <memory>
#include <string>

#include "mma/http_types.hpp"

namespace mma {

struct FetchRequest {
  std::string method = "GET";
  std::string url;
  http::Headers headers;
  std::string body;
  std::chrono::milliseconds timeout{5000};
};

struct FetchResponse {
  enum class Failure { none, timeout, unreachable };
  Failure failure = Failure::none;
  int status = 0;
  http::Headers headers;
  std::string body;
  std::string error;  // transport diagnostic when failure != none
};

// Outbound HTTP. Redirects are never followed.
class SourceClient {
 public:
  virtual ~SourceClient() = default;
  virtual FetchResponse fetch(const FetchRequest& request) const = 0;
};

// cpp-httplib backed client; one connection per call.
class HttpSourceClient final : public SourceClient {
 public:
  FetchResponse fetch(const FetchRequest& request) const override;
};

std::shared_ptr<const SourceClient> default_source_client();

}  // namespace mma
