#include "windvol/toml.hpp"

#include "windvol/core.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

namespace windvol {
namespace {

using json = nlohmann::json;

class Parser {
 public:
  explicit Parser(std::string_view text) : s_(text) {}

  json run() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_ws_comments_newlines();
      if (eof()) break;
      if (peek() == '[') {
        const bool array = s_.substr(pos_, 2) == "[[";
        pos_ += array ? 2 : 1;
        const auto path = key_path(']');
        expect(']');
        if (array) expect(']');
        end_of_line();
        table = open_table(root, path, array);
      } else {
        const auto path = key_path('=');
        expect('=');
        skip_inline_ws();
        json v = value();
        end_of_line();
        assign(*table, path, std::move(v));
      }
    }
    return root;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  int line_ = 1;

  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(Errc::ConfigInvalid, "config line " + std::to_string(line_) + ": " + msg);
  }
  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return eof() ? '\0' : s_[pos_]; }
  char get() {
    if (eof()) fail("unexpected end of input");
    const char c = s_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }
  void expect(char c) {
    skip_inline_ws();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }
  void skip_inline_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  void skip_comment() {
    if (peek() == '#')
      while (!eof() && peek() != '\n') ++pos_;
  }
  void skip_ws_comments_newlines() {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        get();
      } else if (c == '#') {
        skip_comment();
      } else {
        break;
      }
    }
  }
  void end_of_line() {
    skip_inline_ws();
    skip_comment();
    if (peek() == '\r') ++pos_;
    if (!eof() && peek() != '\n') fail("unexpected text after value");
  }

  std::vector<std::string> key_path(char terminator) {
    std::vector<std::string> parts;
    while (true) {
      skip_inline_ws();
      if (peek() == '"') {
        parts.push_back(basic_string());
      } else if (peek() == '\'') {
        parts.push_back(literal_string());
      } else {
        std::string k;
        while (!eof() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-'))
          k.push_back(get());
        if (k.empty()) fail("expected a key");
        parts.push_back(k);
      }
      skip_inline_ws();
      if (peek() == '.') {
        get();
        continue;
      }
      if (peek() != terminator) fail(std::string("expected '") + terminator + "'");
      return parts;
    }
  }

  json* open_table(json& root, const std::vector<std::string>& path, bool array) {
    json* cur = &root;
    for (std::size_t i = 0; i < path.size(); ++i) {
      const bool last = i + 1 == path.size();
      json& next = (*cur)[path[i]];
      if (last && array) {
        if (next.is_null()) next = json::array();
        if (!next.is_array()) fail("'" + path[i] + "' is not an array of tables");
        next.push_back(json::object());
        return &next.back();
      }
      if (next.is_null()) next = json::object();
      if (next.is_array() && !next.empty() && next.back().is_object()) {
        cur = &next.back();
      } else if (next.is_object()) {
        cur = &next;
      } else {
        fail("'" + path[i] + "' is not a table");
      }
    }
    return cur;
  }

  void assign(json& table, const std::vector<std::string>& path, json v) {
    json* cur = &table;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
      json& next = (*cur)[path[i]];
      if (next.is_null()) next = json::object();
      if (!next.is_object()) fail("'" + path[i] + "' is not a table");
      cur = &next;
    }
    if (cur->contains(path.back())) fail("duplicate key '" + path.back() + "'");
    (*cur)[path.back()] = std::move(v);
  }

  json value() {
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    if (c == '{') return inline_table();
    return scalar();
  }

  std::string basic_string() {
    get();
    std::string out;
    while (true) {
      const char c = get();
      if (c == '"') return out;
      if (c == '\n') fail("newline in string");
      if (c != '\\') {
        out.push_back(c);
        continue;
      }
      const char e = get();
      switch (e) {
        case '"': out.push_back('"'); break;
        case '\\': out.push_back('\\'); break;
        case 'n': out.push_back('\n'); break;
        case 't': out.push_back('\t'); break;
        case 'r': out.push_back('\r'); break;
        default: fail(std::string("unsupported escape \\") + e);
      }
    }
  }

  std::string literal_string() {
    get();
    std::string out;
    while (true) {
      const char c = get();
      if (c == '\'') return out;
      if (c == '\n') fail("newline in string");
      out.push_back(c);
    }
  }

  json array() {
    get();
    json out = json::array();
    while (true) {
      skip_ws_comments_newlines();
      if (peek() == ']') {
        get();
        return out;
      }
      out.push_back(value());
      skip_ws_comments_newlines();
      if (peek() == ',') {
        get();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  json inline_table() {
    get();
    json out = json::object();
    skip_inline_ws();
    if (peek() == '}') {
      get();
      return out;
    }
    while (true) {
      const auto path = key_path('=');
      expect('=');
      skip_inline_ws();
      assign(out, path, value());
      skip_inline_ws();
      if (peek() == ',') {
        get();
        continue;
      }
      expect('}');
      return out;
    }
  }

  json scalar() {
    std::string tok;
    while (!eof()) {
      const char c = peek();
      if (c == ',' || c == ']' || c == '}' || c == '#' || c == '\n' || c == '\r' || c == ' ' || c == '\t') break;
      tok.push_back(get());
    }
    if (tok.empty()) fail("expected a value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    if (tok == "inf" || tok == "+inf") return std::numeric_limits<double>::infinity();
    if (tok == "-inf") return -std::numeric_limits<double>::infinity();
    if (tok == "nan" || tok == "+nan" || tok == "-nan") return std::numeric_limits<double>::quiet_NaN();
    // local date
    if (tok.size() == 10 && tok[4] == '-' && tok[7] == '-') return tok;

    std::string num;
    for (std::size_t i = 0; i < tok.size(); ++i) {
      if (tok[i] == '_') {
        if (i == 0 || i + 1 == tok.size() || !std::isdigit(static_cast<unsigned char>(tok[i - 1])) ||
            !std::isdigit(static_cast<unsigned char>(tok[i + 1])))
          fail("misplaced '_' in number");
        continue;
      }
      num.push_back(tok[i]);
    }
    const char* b = num.data() + (num[0] == '+' ? 1 : 0);
    const char* e = num.data() + num.size();
    const bool floating = num.find_first_of(".eE") != std::string::npos;
    if (!floating) {
      long long v = 0;
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec == std::errc() && p == e) return v;
    } else {
      double v = 0;
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec == std::errc() && p == e) return v;
    }
    fail("cannot parse value '" + tok + "'");
  }
};

}  // namespace

nlohmann::json parse_toml(std::string_view text) { return Parser(text).run(); }

}  // namespace windvol
