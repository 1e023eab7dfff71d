#include <set>

#include "mma/codec.hpp"
#include "mma/errors.hpp"
#include "record_json.hpp"

namespace mma {
namespace {

constexpr std::string_view kDatetimeKey = "memento_datetime_YYYYMMDDhhmmss";

bool is_known_meta_key(const std::string& key) {
  return key == "original_uri" || key == "timegate_uri" || key == "timemap_uri";
}

JsonValue parse_payload(std::string_view payload, std::size_t line) {
  try {
    return JsonValue::parse(payload);
  } catch (const JsonValue::parse_error& e) {
    throw ParseError(std::string("malformed object payload: ") + e.what(), line);
  }
}

class CdxjParser {
 public:
  CdxjParser(std::string_view text, ParseMode mode) : text_(text), mode_(mode) {}

  ParseOutcome run() {
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos <= text_.size()) {
      auto end = text_.find('\n', pos);
      if (end == std::string_view::npos) end = text_.size();
      std::string_view line = text_.substr(pos, end - pos);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      ++line_no;
      pos = end + 1;
      if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
      if (line.front() == '!' && seen_record_) {
        throw ParseError("metadata line after the first memento record", line_no);
      }
      try {
        if (line.front() == '!') {
          directive(line, line_no);
        } else {
          record(line, line_no);
        }
      } catch (const ParseError& e) {
        if (mode_ == ParseMode::strict) throw;
        out_.warnings.push_back({line_no, e.what()});
      }
    }
    if (id_uri_ && !out_.timemap.self_uri("cdxj_format")) {
      out_.timemap.self_uris.emplace_back("cdxj_format", *id_uri_);
    }
    normalize(out_.timemap);
    return std::move(out_);
  }

 private:
  void directive(std::string_view line, std::size_t line_no) {
    const auto space = line.find(' ');
    const std::string_view name = line.substr(1, space == std::string_view::npos
                                                     ? std::string_view::npos
                                                     : space - 1);
    const std::string_view payload =
        space == std::string_view::npos ? std::string_view{} : line.substr(space + 1);
    const JsonValue value = parse_payload(payload, line_no);
    TimeMap& tm = out_.timemap;

    if (name == "context") {
      if (!value.is_array()) throw ParseError("!context payload is not an array", line_no);
      for (const auto& uri : value) {
        if (!uri.is_string()) throw ParseError("!context entry is not a string", line_no);
        const auto s = uri.get<std::string>();
        if (!is_standard_context(s)) tm.context_uris.push_back(s);
      }
    } else if (name == "id") {
      if (!value.is_object() || !value.contains("uri") || !value["uri"].is_string()) {
        throw ParseError("!id payload lacks a \"uri\" string", line_no);
      }
      id_uri_ = value["uri"].get<std::string>();
    } else if (name == "keys") {
      if (!value.is_array() || value.size() != 1 || value[0] != kDatetimeKey) {
        throw ParseError("only the single key memento_datetime_YYYYMMDDhhmmss is supported",
                         line_no);
      }
    } else if (name == "meta") {
      meta(value, line_no);
    } else {
      throw ParseError("unknown directive !" + std::string(name), line_no);
    }
  }

  void meta(const JsonValue& value, std::size_t line_no) {
    TimeMap& tm = out_.timemap;
    if (!value.is_object()) throw ParseError("!meta payload is not an object", line_no);
    if (value.size() != 1 || !is_known_meta_key(value.begin().key())) {
      tm.extra_meta.push_back(value);
      return;
    }
    const auto& [key, item] = *value.items().begin();
    try {
      if (key == "original_uri") {
        tm.original = OriginalUri(item.get<std::string>());
      } else if (key == "timegate_uri") {
        tm.timegate_uri = item.get<std::string>();
      } else {
        if (!item.is_object()) throw ParseError("timemap_uri is not an object", line_no);
        for (const auto& [format, uri] : item.items()) {
          tm.self_uris.emplace_back(format, uri.get<std::string>());
        }
      }
    } catch (const JsonValue::exception& e) {
      throw ParseError(std::string("!meta ") + key + ": " + e.what(), line_no);
    } catch (const UriError& e) {
      throw ParseError(std::string("!meta ") + key + ": " + e.what(), line_no);
    }
  }

  void record(std::string_view line, std::size_t line_no) {
    seen_record_ = true;
    const auto space = line.find(' ');
    if (space == std::string_view::npos) throw ParseError("record lacks a payload", line_no);
    const std::string key(line.substr(0, space));
    MementoDatetime key_datetime;
    try {
      key_datetime = MementoDatetime::from_key(key);
    } catch (const ValidationError& e) {
      throw ParseError(std::string("bad sort key: ") + e.what(), line_no);
    }
    JsonValue payload = parse_payload(line.substr(space + 1), line_no);
    if (payload.is_object() && !payload.contains("datetime")) {
      payload["datetime"] = key_datetime.to_rfc1123();
    }
    MementoRecord rec = detail::record_from_object(payload, line_no);

    if (last_key_ && key < *last_key_) {
      out_.warnings.push_back({line_no, "sort keys are not non-decreasing"});
    }
    last_key_ = key;
    if (rec.datetime != key_datetime) {
      out_.warnings.push_back(
          {line_no, "sort key " + key + " disagrees with payload datetime; payload wins"});
    }
    if (!seen_uris_.insert(rec.uri_m).second) {
      throw ParseError("duplicate memento URI " + rec.uri_m, line_no);
    }
    out_.timemap.mementos.push_back(std::move(rec));
  }

  std::string_view text_;
  ParseMode mode_;
  ParseOutcome out_;
  bool seen_record_ = false;
  std::optional<std::string> id_uri_;
  std::optional<std::string> last_key_;
  std::set<std::string> seen_uris_;
};

}  // namespace

ParseOutcome parse_cdxj(std::string_view text, ParseMode mode) {
  return CdxjParser(text, mode).run();
}

std::string serialize_cdxj(const TimeMap& tm) {
  std::string out;
  auto line = [&out](std::string_view directive, const JsonValue& payload) {
    out += directive;
    out += ' ';
    out += dump_inline(payload);
    out += '\n';
  };

  JsonValue contexts = JsonValue::array();
  for (const auto& c : standard_contexts(tm)) contexts.push_back(c);
  for (const auto& c : tm.context_uris) contexts.push_back(c);
  line("!context", contexts);

  if (const auto id = tm.self_uri("cdxj_format")) line("!id", JsonValue{{"uri", *id}});
  line("!keys", JsonValue::array({std::string(kDatetimeKey)}));
  if (tm.original) line("!meta", JsonValue{{"original_uri", tm.original->value()}});
  if (tm.timegate_uri) line("!meta", JsonValue{{"timegate_uri", *tm.timegate_uri}});
  if (!tm.self_uris.empty()) {
    JsonValue uris = JsonValue::object();
    for (const auto& [format, uri] : tm.self_uris) uris[format] = uri;
    line("!meta", JsonValue{{"timemap_uri", uris}});
  }
  for (const auto& meta : tm.extra_meta) line("!meta", meta);

  for (const auto& record : tm.mementos) {
    line(record.datetime.to_key(), detail::record_to_object(record));
  }
  return out;
}

}  // namespace mma
