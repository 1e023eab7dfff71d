#include "record_json.hpp"

#include <map>

#include "mma/errors.hpp"

namespace mma::detail {

JsonValue record_to_object(const MementoRecord& record, bool include_access) {
  JsonValue out = JsonValue::object();
  out["uri"] = record.uri_m;
  out["rel"] = record.rel;
  out["datetime"] = record.datetime.to_rfc1123();

  std::map<std::string, JsonValue> attrs(record.extensions.begin(), record.extensions.end());
  if (record.content.status_code) attrs["status_code"] = *record.content.status_code;
  if (record.content.content_type) attrs["content_type"] = *record.content.content_type;
  if (record.content.last_modified) {
    attrs["last_modified"] = record.content.last_modified->to_rfc1123();
  }
  if (record.damage) attrs["damage"] = *record.damage;
  if (record.access) {
    if (include_access) {
      JsonValue access = JsonValue::object();
      access["type"] = record.access->type;
      access["token"] = record.access->token;
      attrs["access"] = std::move(access);
    } else {
      attrs.erase("access");
    }
  }
  for (auto& [key, value] : attrs) out[key] = std::move(value);
  return out;
}

MementoRecord record_from_object(const JsonValue& object, std::size_t line) {
  if (!object.is_object()) throw ParseError("memento payload is not an object", line);
  MementoRecord record;
  bool have_uri = false;
  bool have_datetime = false;
  for (const auto& [key, value] : object.items()) {
    try {
      if (key == "uri") {
        record.uri_m = value.get<std::string>();
        have_uri = true;
      } else if (key == "rel") {
        record.rel = value.get<std::string>();
      } else if (key == "datetime") {
        record.datetime = MementoDatetime::from_rfc1123(value.get<std::string>());
        have_datetime = true;
      } else if (key == "status_code") {
        if (!value.is_number_integer()) throw ParseError("status_code is not an integer", line);
        record.content.status_code = value.get<int>();
      } else if (key == "content_type") {
        record.content.content_type = value.get<std::string>();
      } else if (key == "last_modified") {
        record.content.last_modified = MementoDatetime::from_rfc1123(value.get<std::string>());
      } else if (key == "damage") {
        if (!value.is_number()) throw ParseError("damage is not a number", line);
        record.damage = value.get<double>();
      } else if (key == "access") {
        if (!value.is_object()) throw ParseError("access is not an object", line);
        AccessAttrs access;
        if (value.contains("type")) access.type = value.at("type").get<std::string>();
        if (value.contains("token")) access.token = value.at("token").get<std::string>();
        record.access = std::move(access);
      } else {
        record.extensions[key] = value;
      }
    } catch (const JsonValue::exception& e) {
      throw ParseError("attribute '" + key + "': " + e.what(), line);
    } catch (const ValidationError& e) {
      throw ParseError("attribute '" + key + "': " + e.what(), line);
    }
  }
  if (!have_uri) throw ParseError("memento payload lacks \"uri\"", line);
  if (!have_datetime) throw ParseError("memento payload lacks \"datetime\"", line);
  try {
    validate_record(record);
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), line);
  }
  return record;
}

}  // namespace mma::detail
