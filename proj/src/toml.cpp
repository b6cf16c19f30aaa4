#include "ddc/toml.hpp"

#include <cctype>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

namespace ddc::toml {

double Value::as_double() const {
  if (std::holds_alternative<double>(v_)) return std::get<double>(v_);
  if (std::holds_alternative<std::int64_t>(v_))
    return static_cast<double>(std::get<std::int64_t>(v_));
  throw ParseError("toml: value is not a number");
}

std::int64_t Value::as_int() const {
  if (std::holds_alternative<std::int64_t>(v_)) return std::get<std::int64_t>(v_);
  throw ParseError("toml: value is not an integer");
}

bool Value::as_bool() const {
  if (std::holds_alternative<bool>(v_)) return std::get<bool>(v_);
  throw ParseError("toml: value is not a boolean");
}

const std::string& Value::as_string() const {
  if (std::holds_alternative<std::string>(v_)) return std::get<std::string>(v_);
  throw ParseError("toml: value is not a string");
}

const Array& Value::as_array() const {
  if (std::holds_alternative<Array>(v_)) return std::get<Array>(v_);
  throw ParseError("toml: value is not an array");
}

const Table& Value::as_table() const {
  if (std::holds_alternative<Table>(v_)) return std::get<Table>(v_);
  throw ParseError("toml: value is not a table");
}

Table& Value::as_table() {
  if (std::holds_alternative<Table>(v_)) return std::get<Table>(v_);
  throw ParseError("toml: value is not a table");
}

namespace {

struct Cursor {
  const char* s;
  int line = 1;

  void skip_ws_inline() {
    while (*s == ' ' || *s == '\t') ++s;
  }
  void skip_ws_and_comments() {
    while (*s) {
      if (*s == ' ' || *s == '\t' || *s == '\r') {
        ++s;
      } else if (*s == '\n') {
        ++s;
        ++line;
      } else if (*s == '#') {
        while (*s && *s != '\n') ++s;
      } else {
        break;
      }
    }
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("toml: " + what + " at line " + std::to_string(line));
  }
};

std::string parse_key(Cursor& c) {
  c.skip_ws_inline();
  std::string k;
  if (*c.s == '"' || *c.s == '\'') {
    const char q = *c.s++;
    while (*c.s && *c.s != q) k.push_back(*c.s++);
    if (*c.s != q) c.fail("unterminated quoted key");
    ++c.s;
    return k;
  }
  while (std::isalnum(static_cast<unsigned char>(*c.s)) || *c.s == '_' || *c.s == '-' || *c.s == '.')
    k.push_back(*c.s++);
  if (k.empty()) c.fail("expected key");
  return k;
}

Value parse_value(Cursor& c);

Value parse_array(Cursor& c) {
  ++c.s;  // '['
  Array a;
  while (true) {
    c.skip_ws_and_comments();
    if (*c.s == ']') {
      ++c.s;
      break;
    }
    a.push_back(parse_value(c));
    c.skip_ws_and_comments();
    if (*c.s == ',') {
      ++c.s;
      continue;
    }
    if (*c.s == ']') {
      ++c.s;
      break;
    }
    c.fail("expected ',' or ']' in array");
  }
  return Value(std::move(a));
}

Value parse_inline_table(Cursor& c) {
  ++c.s;  // '{'
  Table t;
  c.skip_ws_inline();
  if (*c.s == '}') {
    ++c.s;
    return Value(std::move(t));
  }
  while (true) {
    std::string k = parse_key(c);
    c.skip_ws_inline();
    if (*c.s != '=') c.fail("expected '=' in inline table");
    ++c.s;
    c.skip_ws_inline();
    t[k] = parse_value(c);
    c.skip_ws_inline();
    if (*c.s == ',') {
      ++c.s;
      c.skip_ws_inline();
      continue;
    }
    if (*c.s == '}') {
      ++c.s;
      break;
    }
    c.fail("expected ',' or '}' in inline table");
  }
  return Value(std::move(t));
}

Value parse_value(Cursor& c) {
  c.skip_ws_inline();
  if (*c.s == '[') return parse_array(c);
  if (*c.s == '{') return parse_inline_table(c);
  if (*c.s == '"' || *c.s == '\'') {
    const char q = *c.s++;
    std::string v;
    while (*c.s && *c.s != q) {
      if (q == '"' && *c.s == '\\' && c.s[1]) {
        ++c.s;
        switch (*c.s) {
          case 'n': v.push_back('\n'); break;
          case 't': v.push_back('\t'); break;
          case '"': v.push_back('"'); break;
          case '\\': v.push_back('\\'); break;
          default: v.push_back(*c.s); break;
        }
        ++c.s;
      } else {
        v.push_back(*c.s++);
      }
    }
    if (*c.s != q) c.fail("unterminated string");
    ++c.s;
    return Value(std::move(v));
  }
  if (std::strncmp(c.s, "true", 4) == 0) {
    c.s += 4;
    return Value(true);
  }
  if (std::strncmp(c.s, "false", 5) == 0) {
    c.s += 5;
    return Value(false);
  }
  // number: integer if it parses without '.', 'e', 'inf', 'nan'
  const char* start = c.s;
  char* end = nullptr;
  double d = std::strtod(start, &end);
  if (end == start) c.fail("expected a value");
  const std::string tok(start, static_cast<size_t>(end - start));
  c.s = end;
  if (tok.find_first_of(".eEnN") == std::string::npos) {
    return Value(static_cast<std::int64_t>(std::strtoll(tok.c_str(), nullptr, 10)));
  }
  return Value(d);
}

Table* descend(Table& root, const std::string& dotted, Cursor& c) {
  Table* t = &root;
  size_t pos = 0;
  while (pos <= dotted.size()) {
    size_t dot = dotted.find('.', pos);
    std::string part = dotted.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (part.empty()) c.fail("empty key segment");
    auto it = t->find(part);
    if (it == t->end()) {
      (*t)[part] = Value(Table{});
      it = t->find(part);
    }
    if (!it->second.is_table()) c.fail("key '" + part + "' is not a table");
    t = &it->second.as_table();
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  return t;
}

}  // namespace

Table parse(const std::string& text) {
  Table root;
  Cursor c{text.c_str()};
  Table* current = &root;
  while (true) {
    c.skip_ws_and_comments();
    if (!*c.s) break;
    if (*c.s == '[') {
      ++c.s;
      std::string name = parse_key(c);
      c.skip_ws_inline();
      if (*c.s != ']') c.fail("expected ']' after table name");
      ++c.s;
      current = descend(root, name, c);
      continue;
    }
    std::string key = parse_key(c);
    c.skip_ws_inline();
    if (*c.s != '=') c.fail("expected '=' after key '" + key + "'");
    ++c.s;
    Value v = parse_value(c);
    // dotted keys create intermediate tables
    size_t dot = key.rfind('.');
    if (dot == std::string::npos) {
      (*current)[key] = std::move(v);
    } else {
      Table* t = descend(*current, key.substr(0, dot), c);
      (*t)[key.substr(dot + 1)] = std::move(v);
    }
  }
  return root;
}

Table parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("toml: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

const Value* find(const Table& t, const std::string& path) {
  const Table* cur = &t;
  size_t pos = 0;
  while (true) {
    size_t dot = path.find('.', pos);
    std::string part = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    auto it = cur->find(part);
    if (it == cur->end()) return nullptr;
    if (dot == std::string::npos) return &it->second;
    if (!it->second.is_table()) return nullptr;
    cur = &it->second.as_table();
    pos = dot + 1;
  }
}

double get_double(const Table& t, const std::string& path) {
  const Value* v = find(t, path);
  if (!v) throw ParseError("toml: missing key '" + path + "'");
  return v->as_double();
}

double get_double_or(const Table& t, const std::string& path, double dflt) {
  const Value* v = find(t, path);
  return v ? v->as_double() : dflt;
}

std::int64_t get_int_or(const Table& t, const std::string& path, std::int64_t dflt) {
  const Value* v = find(t, path);
  return v ? v->as_int() : dflt;
}

std::string get_string(const Table& t, const std::string& path) {
  const Value* v = find(t, path);
  if (!v) throw ParseError("toml: missing key '" + path + "'");
  return v->as_string();
}

std::string get_string_or(const Table& t, const std::string& path, const std::string& dflt) {
  const Value* v = find(t, path);
  return v ? v->as_string() : dflt;
}

bool get_bool_or(const Table& t, const std::string& path, bool dflt) {
  const Value* v = find(t, path);
  return v ? v->as_bool() : dflt;
}

}  // namespace ddc::toml
