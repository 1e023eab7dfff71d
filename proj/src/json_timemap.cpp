#include <set>

#include "mma/codec.hpp"
#include "mma/errors.hpp"
#include "record_json.hpp"

namespace mma {

std::string serialize_json(const TimeMap& tm) {
  JsonValue doc = JsonValue::object();
  if (tm.original) doc["original_uri"] = tm.original->value();
  if (tm.timegate_uri) doc["timegate_uri"] = *tm.timegate_uri;
  if (!tm.self_uris.empty()) {
    JsonValue uris = JsonValue::object();
    for (const auto& [format, uri] : tm.self_uris) uris[format] = uri;
    doc["timemap_uri"] = std::move(uris);
  }
  JsonValue contexts = JsonValue::array();
  for (const auto& c : standard_contexts(tm)) contexts.push_back(c);
  for (const auto& c : tm.context_uris) contexts.push_back(c);
  doc["context"] = std::move(contexts);
  if (!tm.extra_meta.empty()) doc["meta"] = JsonValue(tm.extra_meta);
  JsonValue mementos = JsonValue::array();
  for (const auto& record : tm.mementos) mementos.push_back(detail::record_to_object(record));
  doc["mementos"] = std::move(mementos);
  return dump_inline(doc) + "\n";
}

ParseOutcome parse_json(std::string_view text, ParseMode mode) {
  JsonValue doc;
  try {
    doc = JsonValue::parse(text);
  } catch (const JsonValue::parse_error& e) {
    throw ParseError(std::string("malformed JSON TimeMap: ") + e.what(), 0);
  }
  if (!doc.is_object()) throw ParseError("JSON TimeMap is not an object", 0);

  ParseOutcome out;
  TimeMap& tm = out.timemap;
  try {
    if (doc.contains("original_uri")) tm.original = OriginalUri(doc["original_uri"].get<std::string>());
    if (doc.contains("timegate_uri")) tm.timegate_uri = doc["timegate_uri"].get<std::string>();
    if (doc.contains("timemap_uri")) {
      for (const auto& [format, uri] : doc["timemap_uri"].items()) {
        tm.self_uris.emplace_back(format, uri.get<std::string>());
      }
    }
    if (doc.contains("context")) {
      for (const auto& c : doc["context"]) {
        const auto s = c.get<std::string>();
        if (!is_standard_context(s)) tm.context_uris.push_back(s);
      }
    }
    if (doc.contains("meta")) {
      for (const auto& m : doc["meta"]) tm.extra_meta.push_back(m);
    }
  } catch (const JsonValue::exception& e) {
    throw ParseError(std::string("JSON TimeMap metadata: ") + e.what(), 0);
  } catch (const UriError& e) {
    throw ParseError(std::string("JSON TimeMap original_uri: ") + e.what(), 0);
  }

  if (doc.contains("mementos")) {
    if (!doc["mementos"].is_array()) throw ParseError("mementos is not an array", 0);
    std::set<std::string> seen;
    std::size_t index = 0;
    for (const auto& item : doc["mementos"]) {
      ++index;
      try {
        MementoRecord record = detail::record_from_object(item, 0);
        if (!seen.insert(record.uri_m).second) {
          throw ParseError("duplicate memento URI " + record.uri_m, 0);
        }
        tm.mementos.push_back(std::move(record));
      } catch (const ParseError& e) {
        if (mode == ParseMode::strict) throw;
        out.warnings.push_back({0, "memento #" + std::to_string(index) + ": " + e.what()});
      }
    }
  }
  normalize(tm);
  return out;
}

}  // namespace mma
