#pragma once

// Program inputs (JSON) and observable outputs shared by every executor.

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "typeline/value.hpp"

namespace typeline {

/// Final values of the visible globals, in declaration order. Multi-word
/// symbols (arrays, structs) appear as `name[i]`.
using Outputs = std::vector<std::pair<std::string, Value>>;

inline std::string output_name(const std::string& symbol, std::size_t word, std::size_t words) {
  return words == 1 ? symbol : symbol + "[" + std::to_string(word) + "]";
}

inline nlohmann::json parse_inputs(const std::string& text) {
  nlohmann::json j;
  try {
    j = text.empty() ? nlohmann::json::object() : nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("inputs: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::InvalidArgument, "inputs must be a JSON object");
  return j;
}

inline Value input_value(const nlohmann::json& j, ValueType t, const std::string& name) {
  auto bad = [&] { return Error(ErrorCode::InvalidArgument, "input " + name + " does not fit " + std::string(value_suffix(t))); };
  if (!j.is_number()) throw bad();
  if (is_floating(t)) {
    const double d = j.get<double>();
    return t == ValueType::Float ? Value::of_float(static_cast<float>(d)) : Value::of_double(d);
  }
  if (!j.is_number_integer()) throw bad();
  const std::int64_t v = j.get<std::int64_t>();
  switch (t) {
    case ValueType::Char:
      if (v < 0 || v > 255) throw bad();
      return Value::of_char(static_cast<std::uint8_t>(v));
    case ValueType::Int:
      if (v < INT32_MIN || v > INT32_MAX) throw bad();
      return Value::of_int(static_cast<std::int32_t>(v));
    default: return Value::of_long(v);
  }
}

/// Overwrites `words` (the initial image of one symbol) from a JSON scalar or array.
inline void bind_input(const nlohmann::json& j, std::vector<Value>& words, const std::string& name) {
  if (j.is_array()) {
    if (j.size() > words.size())
      throw Error(ErrorCode::InvalidArgument, "input " + name + " has more than " + std::to_string(words.size()) + " elements");
    for (std::size_t i = 0; i < j.size(); ++i) words[i] = input_value(j[i], words[i].type(), name);
    return;
  }
  if (words.size() != 1) throw Error(ErrorCode::InvalidArgument, "input " + name + " needs an array");
  words[0] = input_value(j, words[0].type(), name);
}

inline nlohmann::json value_json(const Value& v) {
  switch (v.type()) {
    case ValueType::Char: return v.as_char();
    case ValueType::Int: return v.as_int();
    case ValueType::Long: return v.as_long();
    case ValueType::Float: return static_cast<double>(v.as_float());
    case ValueType::Double: return v.as_double();
  }
  return nullptr;
}

/// Outputs as a JSON object in declaration order; non-finite values become null.
inline nlohmann::ordered_json outputs_json(const Outputs& outs) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [name, v] : outs) {
    nlohmann::json x = value_json(v);
    if (x.is_number_float() && !std::isfinite(x.get<double>())) x = nullptr;
    j[name] = x;
  }
  return j;
}

}  // namespace typeline
