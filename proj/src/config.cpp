#include "mma/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "mma/errors.hpp"

namespace mma {

void ServiceConfig::validate() const {
  if (self_id.empty()) throw ConfigError("self_id must be set");
  std::set<std::string> ids;
  for (const auto& s : sources) {
    if (s.id.empty()) throw ConfigError("source without id");
    if (!ids.insert(s.id).second) throw ConfigError("duplicate source id " + s.id);
    if (s.id == self_id) throw ConfigError("self_id " + self_id + " collides with a source id");
    if (!is_absolute_http_uri(s.timemap_url("http://example.org/"))) {
      throw ConfigError("source " + s.id + " has no absolute timemap endpoint");
    }
  }
  for (const auto& rule : rules) {
    if (rule.matcher.empty()) throw ConfigError("rule with empty matcher");
    for (const auto& id : rule.source_ids) {
      if (!ids.count(id)) throw ConfigError("rule '" + rule.matcher + "' names unknown source " + id);
    }
  }
  if (depth_limit == 0) throw ConfigError("depth_limit must be positive");
}

SourceDescriptor source_from_json(const JsonValue& item) {
  try {
    SourceDescriptor s;
    s.id = item.at("id").get<std::string>();
    s.kind = source_kind_from_string(item.value("kind", "archive"));
    s.visibility = visibility_from_string(item.value("visibility", "public"));
    s.timemap_endpoint = item.at("timemap").get<std::string>();
    if (item.contains("auth")) s.auth_pointer = item.at("auth").get<std::string>();
    return s;
  } catch (const JsonValue::exception& e) {
    throw ConfigError(std::string("bad source entry: ") + e.what());
  } catch (const ValidationError& e) {
    throw ConfigError(std::string("bad source entry: ") + e.what());
  }
}

FilterRule rule_from_json(const JsonValue& item) {
  try {
    return FilterRule{item.at("match").get<std::string>(),
                      item.at("sources").get<std::vector<std::string>>()};
  } catch (const JsonValue::exception& e) {
    throw ConfigError(std::string("bad rule entry: ") + e.what());
  }
}

void parse_listen(const std::string& text, std::string& host, int& port) {
  const auto colon = text.rfind(':');
  const std::string port_text = colon == std::string::npos ? text : text.substr(colon + 1);
  if (colon != std::string::npos && colon > 0) host = text.substr(0, colon);
  try {
    std::size_t used = 0;
    port = std::stoi(port_text, &used);
    if (used != port_text.size() || port < 0 || port > 65535) throw std::out_of_range("port");
  } catch (const std::exception&) {
    throw ConfigError("bad listen address: " + text);
  }
}

ServiceConfig service_config_from_json(const JsonValue& doc) {
  ServiceConfig config;
  try {
    config.self_id = doc.at("self_id").get<std::string>();
    if (doc.contains("listen")) {
      parse_listen(doc.at("listen").get<std::string>(), config.listen_host, config.listen_port);
    }
    if (doc.contains("public_base")) config.public_base = doc.at("public_base").get<std::string>();
    config.timeout = std::chrono::milliseconds(doc.value("timeout_ms", 5000));
    config.depth_limit = doc.value("depth_limit", std::size_t{8});
    for (const auto& item : doc.value("sources", JsonValue::array())) {
      config.sources.push_back(source_from_json(item));
    }
    for (const auto& item : doc.value("rules", JsonValue::array())) {
      config.rules.push_back(rule_from_json(item));
    }
  } catch (const JsonValue::exception& e) {
    throw ConfigError(std::string("bad service config: ") + e.what());
  }
  config.validate();
  return config;
}

JsonValue read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return JsonValue::parse(buf.str());
  } catch (const JsonValue::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

ServiceConfig load_service_config(const std::string& path) {
  return service_config_from_json(read_json_file(path));
}

}  // namespace mma
