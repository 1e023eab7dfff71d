#include "mma/link_header.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "mma/errors.hpp"

namespace mma {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

bool is_token_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  if (std::isalnum(u)) return true;
  return std::string_view("!#$%&'*+-.^_`|~").find(c) != std::string_view::npos;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

class Cursor {
 public:
  explicit Cursor(std::string_view text) : text_(text) {}

  bool done() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }
  std::size_t pos() const { return pos_; }
  void advance() { ++pos_; }
  void seek(std::size_t pos) { pos_ = pos; }
  void skip_space() {
    while (!done() && is_space(peek())) ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what + " at offset " + std::to_string(pos_), 0);
  }

  LinkValue link_value() {
    LinkValue link;
    skip_space();
    if (done() || peek() != '<') fail("expected '<'");
    advance();
    const auto close = text_.find('>', pos_);
    if (close == std::string_view::npos) fail("unterminated '<'");
    link.target = std::string(text_.substr(pos_, close - pos_));
    pos_ = close + 1;
    while (true) {
      skip_space();
      if (done() || peek() == ',') break;
      if (peek() != ';') fail("expected ';' or ','");
      advance();
      skip_space();
      const std::size_t name_start = pos_;
      while (!done() && is_token_char(peek())) advance();
      if (pos_ == name_start) fail("empty parameter name");
      std::string name = lower(text_.substr(name_start, pos_ - name_start));
      skip_space();
      std::string value;
      if (!done() && peek() == '=') {
        advance();
        skip_space();
        value = done() ? std::string() : (peek() == '"' ? quoted() : token());
      }
      link.params.emplace_back(std::move(name), std::move(value));
    }
    return link;
  }

  // Resynchronizes on the next `,` that starts a new link-value.
  bool recover() {
    while (!done()) {
      if (peek() == ',') {
        std::size_t look = pos_ + 1;
        while (look < text_.size() && is_space(text_[look])) ++look;
        if (look < text_.size() && text_[look] == '<') {
          pos_ = look;
          return true;
        }
      }
      advance();
    }
    return false;
  }

 private:
  std::string quoted() {
    advance();  // opening quote
    std::string out;
    while (true) {
      if (done()) fail("unterminated quoted string");
      char c = peek();
      advance();
      if (c == '"') break;
      if (c == '\\') {
        if (done()) fail("dangling escape");
        c = peek();
        advance();
      }
      out += c;
    }
    return out;
  }

  std::string token() {
    const std::size_t start = pos_;
    while (!done() && is_token_char(peek())) advance();
    if (pos_ == start) fail("expected parameter value");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

std::optional<std::string> LinkValue::param(std::string_view name) const {
  for (const auto& [key, value] : params) {
    if (key == name) return value;
  }
  return std::nullopt;
}

std::vector<std::string> LinkValue::rels() const {
  std::vector<std::string> out;
  const auto rel = param("rel");
  if (!rel) return out;
  std::istringstream in(lower(*rel));
  for (std::string r; in >> r;) out.push_back(r);
  return out;
}

bool LinkValue::has_rel(std::string_view rel) const {
  const auto all = rels();
  return std::find(all.begin(), all.end(), rel) != all.end();
}

LinkParseResult parse_link_values(std::string_view text, bool lenient) {
  LinkParseResult result;
  Cursor cursor(text);
  while (true) {
    cursor.skip_space();
    while (!cursor.done() && cursor.peek() == ',') {
      cursor.advance();
      cursor.skip_space();
    }
    if (cursor.done()) break;
    const std::size_t start = cursor.pos();
    try {
      result.links.push_back(cursor.link_value());
    } catch (const ParseError&) {
      if (!lenient) throw;
      result.skipped_offsets.push_back(start);
      cursor.seek(start + 1);
      if (!cursor.recover()) break;
    }
  }
  return result;
}

std::string quote_string(std::string_view value) {
  std::string out = "\"";
  for (char c : value) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string format_link_value(const LinkValue& link) {
  std::string out = "<" + link.target + ">";
  for (const auto& [name, value] : link.params) {
    out += "; " + name + "=" + quote_string(value);
  }
  return out;
}

}  // namespace mma
