#ifndef POWERMAT_TOML_LITE_HPP
#define POWERMAT_TOML_LITE_HPP

// Minimal TOML reader covering the schema this project uses: [section] and
// [dotted.section] headers, bare keys, basic strings, integers, floats,
// booleans, and arrays (single- or multi-line). Comments start at '#'
// outside strings. Keys are addressed flat as "section.key". Reads are
// tracked so callers can reject keys no consumer ever asked for.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "powermat/errors.hpp"

namespace powermat::toml_lite {

struct Value {
  enum class Kind { boolean, integer, floating, string, array };
  Kind kind = Kind::string;
  bool b = false;
  std::int64_t i = 0;
  double d = 0.0;
  std::string s;
  std::vector<Value> items;
  int line = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Cuts a '#' comment, honoring string literals and their escapes.
inline std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (in_string) {
      if (ch == '\\') ++i;
      else if (ch == '"') in_string = false;
    } else if (ch == '"') {
      in_string = true;
    } else if (ch == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

// Net [ ] depth outside strings; decides whether an array continues on the
// next physical line.
inline int bracket_delta(const std::string& text) {
  bool in_string = false;
  int depth = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_string) {
      if (ch == '\\') ++i;
      else if (ch == '"') in_string = false;
    } else if (ch == '"') {
      in_string = true;
    } else if (ch == '[') {
      ++depth;
    } else if (ch == ']') {
      --depth;
    }
  }
  return depth;
}

inline bool valid_bare_key(const std::string& s) {
  if (s.empty()) return false;
  for (const char ch : s)
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-' || ch == '.'))
      return false;
  return true;
}

inline std::string parse_string_literal(const std::string& text, int line) {
  if (text.size() < 2 || text.front() != '"' || text.back() != '"')
    throw config_error("line " + std::to_string(line) + ": malformed string " + text);
  std::string out;
  for (std::size_t i = 1; i + 1 < text.size(); ++i) {
    const char ch = text[i];
    if (ch != '\\') {
      out.push_back(ch);
      continue;
    }
    ++i;
    if (i >= text.size() - 1)  // the escape would swallow the closing quote
      throw config_error("line " + std::to_string(line) + ": dangling escape");
    const char esc = text[i];
    switch (esc) {
      case '"': out.push_back('"'); break;
      case '\\': out.push_back('\\'); break;
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      case 'r': out.push_back('\r'); break;
      default:
        throw config_error("line " + std::to_string(line) + ": unsupported escape \\" +
                           std::string(1, esc));
    }
  }
  return out;
}

// Splits an array body on top-level commas, respecting nesting and strings.
inline std::vector<std::string> split_items(const std::string& body, int line) {
  std::vector<std::string> out;
  bool in_string = false;
  int depth = 0;
  std::string current;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char ch = body[i];
    if (in_string) {
      current.push_back(ch);
      if (ch == '\\' && i + 1 < body.size()) current.push_back(body[++i]);
      else if (ch == '"') in_string = false;
      continue;
    }
    if (ch == '"') {
      in_string = true;
      current.push_back(ch);
    } else if (ch == '[') {
      ++depth;
      current.push_back(ch);
    } else if (ch == ']') {
      --depth;
      current.push_back(ch);
    } else if (ch == ',' && depth == 0) {
      out.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  if (in_string) throw config_error("line " + std::to_string(line) + ": unterminated string");
  const std::string last = trim(current);
  if (!last.empty()) out.push_back(last);  // trailing comma tolerated
  return out;
}

inline Value parse_value(const std::string& raw, int line);

inline Value parse_array(const std::string& text, int line) {
  Value v;
  v.kind = Value::Kind::array;
  v.line = line;
  const std::string body = trim(text.substr(1, text.size() - 2));
  if (body.empty()) return v;
  for (const auto& item : split_items(body, line)) v.items.push_back(parse_value(item, line));
  return v;
}

inline Value parse_value(const std::string& raw, int line) {
  const std::string text = trim(raw);
  if (text.empty()) throw config_error("line " + std::to_string(line) + ": missing value");
  Value v;
  v.line = line;
  if (text.front() == '"') {
    v.kind = Value::Kind::string;
    v.s = parse_string_literal(text, line);
    return v;
  }
  if (text.front() == '[') {
    if (text.back() != ']')
      throw config_error("line " + std::to_string(line) + ": unterminated array");
    return parse_array(text, line);
  }
  if (text == "true" || text == "false") {
    v.kind = Value::Kind::boolean;
    v.b = text == "true";
    return v;
  }
  std::string num = text;
  if (!num.empty() && num.front() == '+') num.erase(0, 1);
  {
    std::int64_t i = 0;
    const auto r = std::from_chars(num.data(), num.data() + num.size(), i);
    if (r.ec == std::errc{} && r.ptr == num.data() + num.size()) {
      v.kind = Value::Kind::integer;
      v.i = i;
      return v;
    }
  }
  {
    double d = 0.0;
    const auto r = std::from_chars(num.data(), num.data() + num.size(), d);
    if (r.ec == std::errc{} && r.ptr == num.data() + num.size()) {
      v.kind = Value::Kind::floating;
      v.d = d;
      return v;
    }
  }
  throw config_error("line " + std::to_string(line) + ": cannot parse value '" + text + "'");
}

inline const char* kind_name(Value::Kind k) {
  switch (k) {
    case Value::Kind::boolean: return "boolean";
    case Value::Kind::integer: return "integer";
    case Value::Kind::floating: return "float";
    case Value::Kind::string: return "string";
    default: return "array";
  }
}

}  // namespace detail

class Document {
 public:
  bool has(const std::string& key) const {
    if (const auto it = values_.find(key); it != values_.end()) {
      read_.insert(key);
      return true;
    }
    return false;
  }

  std::string get_string(const std::string& key) const {
    return require(key, Value::Kind::string).s;
  }
  std::string get_string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  bool get_bool_or(const std::string& key, bool fallback) const {
    return has(key) ? require(key, Value::Kind::boolean).b : fallback;
  }

  std::int64_t get_int(const std::string& key) const {
    return require(key, Value::Kind::integer).i;
  }
  std::int64_t get_int_or(const std::string& key, std::int64_t fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  double get_double(const std::string& key) const {
    const Value& v = lookup(key);
    if (v.kind == Value::Kind::floating) return v.d;
    if (v.kind == Value::Kind::integer) return static_cast<double>(v.i);
    throw type_mismatch(key, v, "number");
  }
  double get_double_or(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  std::vector<double> get_double_array(const std::string& key) const {
    const Value& v = require(key, Value::Kind::array);
    std::vector<double> out;
    for (const auto& item : v.items) {
      if (item.kind == Value::Kind::floating) out.push_back(item.d);
      else if (item.kind == Value::Kind::integer) out.push_back(static_cast<double>(item.i));
      else throw type_mismatch(key, item, "number");
    }
    return out;
  }

  std::vector<std::int64_t> get_int_array(const std::string& key) const {
    const Value& v = require(key, Value::Kind::array);
    std::vector<std::int64_t> out;
    for (const auto& item : v.items) {
      if (item.kind != Value::Kind::integer) throw type_mismatch(key, item, "integer");
      out.push_back(item.i);
    }
    return out;
  }

  std::vector<std::string> get_string_array(const std::string& key) const {
    const Value& v = require(key, Value::Kind::array);
    std::vector<std::string> out;
    for (const auto& item : v.items) {
      if (item.kind != Value::Kind::string) throw type_mismatch(key, item, "string");
      out.push_back(item.s);
    }
    return out;
  }

  // Keys present in the file that no accessor ever touched.
  std::vector<std::string> unread_keys() const {
    std::vector<std::string> out;
    for (const auto& [key, value] : values_)
      if (read_.count(key) == 0) out.push_back(key);
    return out;
  }

  void insert(const std::string& key, Value value) {
    if (!values_.emplace(key, std::move(value)).second)
      throw config_error("duplicate key '" + key + "'");
  }

 private:
  const Value& lookup(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw config_error("missing key '" + key + "'");
    read_.insert(key);
    return it->second;
  }

  const Value& require(const std::string& key, Value::Kind kind) const {
    const Value& v = lookup(key);
    if (v.kind != kind) throw type_mismatch(key, v, detail::kind_name(kind));
    return v;
  }

  static config_error type_mismatch(const std::string& key, const Value& v,
                                    const std::string& wanted) {
    return config_error("key '" + key + "' (line " + std::to_string(v.line) + "): expected " +
                        wanted + ", found " + detail::kind_name(v.kind));
  }

  std::map<std::string, Value> values_;
  mutable std::set<std::string> read_;
};

inline Document parse_string(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string line;
  std::string prefix;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stmt = detail::trim(detail::strip_comment(line));
    if (stmt.empty()) continue;

    if (stmt.front() == '[') {
      if (stmt.back() != ']')
        throw config_error("line " + std::to_string(line_no) + ": malformed section header");
      const std::string name = detail::trim(stmt.substr(1, stmt.size() - 2));
      if (!detail::valid_bare_key(name))
        throw config_error("line " + std::to_string(line_no) + ": bad section name '" + name +
                           "'");
      prefix = name + ".";
      continue;
    }

    const auto eq = stmt.find('=');
    if (eq == std::string::npos)
      throw config_error("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = detail::trim(stmt.substr(0, eq));
    if (!detail::valid_bare_key(key))
      throw config_error("line " + std::to_string(line_no) + ": bad key '" + key + "'");
    std::string value_text = detail::trim(stmt.substr(eq + 1));
    const int value_line = line_no;

    while (detail::bracket_delta(value_text) > 0) {
      if (!std::getline(in, line))
        throw config_error("line " + std::to_string(value_line) + ": unterminated array");
      ++line_no;
      value_text += " " + detail::trim(detail::strip_comment(line));
    }
    doc.insert(prefix + key, detail::parse_value(value_text, value_line));
  }
  return doc;
}

inline Document parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_string(buffer.str());
}

}  // namespace powermat::toml_lite

#endif
