#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "ddc/errors.hpp"

// Minimal TOML subset used for run configs and noise sidecars: comments,
// [section] headers (dotted), key = value with strings, integers, floats,
// booleans, arrays and inline tables. Enough for hand-written desk-scale
// configs; not a general TOML implementation.
namespace ddc::toml {

class Value;
using Array = std::vector<Value>;
using Table = std::map<std::string, Value>;

class Value {
 public:
  Value() : v_(std::monostate{}) {}
  explicit Value(bool b) : v_(b) {}
  explicit Value(std::int64_t i) : v_(i) {}
  explicit Value(double d) : v_(d) {}
  explicit Value(std::string s) : v_(std::move(s)) {}
  explicit Value(Array a) : v_(std::move(a)) {}
  explicit Value(Table t) : v_(std::move(t)) {}

  bool is_table() const { return std::holds_alternative<Table>(v_); }
  bool is_array() const { return std::holds_alternative<Array>(v_); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_number() const {
    return std::holds_alternative<double>(v_) || std::holds_alternative<std::int64_t>(v_);
  }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }

  double as_double() const;
  std::int64_t as_int() const;
  bool as_bool() const;
  const std::string& as_string() const;
  const Array& as_array() const;
  const Table& as_table() const;
  Table& as_table();

 private:
  std::variant<std::monostate, bool, std::int64_t, double, std::string, Array, Table> v_;
};

Table parse(const std::string& text);
Table parse_file(const std::string& path);

// Lookup helpers; `path` is dot-separated. The *_or forms return the default
// when the key is absent; the plain forms throw ParseError.
const Value* find(const Table& t, const std::string& path);
double get_double(const Table& t, const std::string& path);
double get_double_or(const Table& t, const std::string& path, double dflt);
std::int64_t get_int_or(const Table& t, const std::string& path, std::int64_t dflt);
std::string get_string(const Table& t, const std::string& path);
std::string get_string_or(const Table& t, const std::string& path, const std::string& dflt);
bool get_bool_or(const Table& t, const std::string& path, bool dflt);

}  // namespace ddc::toml
