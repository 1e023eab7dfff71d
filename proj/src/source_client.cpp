#include "mma/source_client.hpp"

#include <httplib.h>

#include "mma/uri.hpp"

namespace mma {

FetchResponse HttpSourceClient::fetch(const FetchRequest& request) const {
  FetchResponse out;
  UriParts parts;
  try {
    parts = split_uri(request.url);
  } catch (const std::exception& e) {
    out.failure = FetchResponse::Failure::unreachable;
    out.error = e.what();
    return out;
  }
  std::string scheme_host_port = parts.scheme + "://" + parts.host;
  if (parts.port && !parts.port->empty()) scheme_host_port += ":" + *parts.port;
  std::string target = parts.path.empty() ? "/" : parts.path;
  if (parts.query) target += "?" + *parts.query;

  httplib::Client client(scheme_host_port);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
  const auto usecs =
      std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  client.set_follow_location(false);
  client.set_keep_alive(false);
  client.set_url_encode(false);

  httplib::Headers headers;
  for (const auto& [name, value] : request.headers) {
    // httplib adds Content-Type itself from the argument below.
    if (request.method == "POST" && http::iequals(name, "Content-Type")) continue;
    headers.emplace(name, value);
  }

  httplib::Result result;
  if (request.method == "HEAD") {
    result = client.Head(target, headers);
  } else if (request.method == "POST") {
    const auto type = request.headers.get("Content-Type").value_or("application/json");
    result = client.Post(target, headers, request.body, type);
  } else {
    result = client.Get(target, headers);
  }

  if (!result) {
    const auto err = result.error();
    out.error = httplib::to_string(err);
    out.failure = (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                      ? FetchResponse::Failure::timeout
                      : FetchResponse::Failure::unreachable;
    return out;
  }
  out.status = result->status;
  for (const auto& [name, value] : result->headers) out.headers.add(name, value);
  out.body = result->body;
  return out;
}

std::shared_ptr<const SourceClient> default_source_client() {
  static const auto client = std::make_shared<HttpSourceClient>();
  return client;
}

}  // namespace mma
