#pragma once

#include <array>
#include <bit>
#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "typeline/error.hpp"

namespace typeline {

// Declaration order is the promotion order.
enum class SdtKind : std::uint8_t { Char, Int, Float, Double };

inline constexpr std::array<SdtKind, 4> kAllSdt{SdtKind::Char, SdtKind::Int, SdtKind::Float,
                                                SdtKind::Double};

constexpr SdtKind promote(SdtKind a, SdtKind b) { return a < b ? b : a; }

constexpr std::string_view suffix(SdtKind k) {
  switch (k) {
    case SdtKind::Char: return "ch";
    case SdtKind::Int: return "in";
    case SdtKind::Float: return "ft";
    case SdtKind::Double: return "db";
  }
  return "";
}

constexpr std::string_view type_name(SdtKind k) {
  switch (k) {
    case SdtKind::Char: return "char";
    case SdtKind::Int: return "int";
    case SdtKind::Float: return "float";
    case SdtKind::Double: return "double";
  }
  return "";
}

/// Machine value types. Long carries every traditional-lane integer: long, enum, pointers.
enum class ValueType : std::uint8_t { Char, Int, Long, Float, Double };

constexpr std::optional<SdtKind> sdt_of(ValueType t) {
  switch (t) {
    case ValueType::Char: return SdtKind::Char;
    case ValueType::Int: return SdtKind::Int;
    case ValueType::Float: return SdtKind::Float;
    case ValueType::Double: return SdtKind::Double;
    case ValueType::Long: return std::nullopt;
  }
  return std::nullopt;
}

constexpr ValueType value_type(SdtKind k) {
  switch (k) {
    case SdtKind::Char: return ValueType::Char;
    case SdtKind::Int: return ValueType::Int;
    case SdtKind::Float: return ValueType::Float;
    case SdtKind::Double: return ValueType::Double;
  }
  return ValueType::Int;
}

constexpr bool is_floating(ValueType t) { return t == ValueType::Float || t == ValueType::Double; }

/// Register classes: the four process lines plus the traditional lane.
enum class RegClass : std::uint8_t { Int, Float, Double, Char, Trad };

inline constexpr int kRegClassCount = 5;
inline constexpr int kRegistersPerFile = 32;

constexpr RegClass reg_class(ValueType t) {
  switch (t) {
    case ValueType::Char: return RegClass::Char;
    case ValueType::Int: return RegClass::Int;
    case ValueType::Float: return RegClass::Float;
    case ValueType::Double: return RegClass::Double;
    case ValueType::Long: return RegClass::Trad;
  }
  return RegClass::Int;
}

constexpr RegClass reg_class(SdtKind k) { return reg_class(value_type(k)); }

constexpr ValueType class_type(RegClass c) {
  switch (c) {
    case RegClass::Int: return ValueType::Int;
    case RegClass::Float: return ValueType::Float;
    case RegClass::Double: return ValueType::Double;
    case RegClass::Char: return ValueType::Char;
    case RegClass::Trad: return ValueType::Long;
  }
  return ValueType::Int;
}

constexpr char reg_prefix(RegClass c) {
  switch (c) {
    case RegClass::Int: return 'r';
    case RegClass::Float: return 'f';
    case RegClass::Double: return 'd';
    case RegClass::Char: return 'c';
    case RegClass::Trad: return 'x';
  }
  return '?';
}

constexpr std::string_view value_suffix(ValueType t) {
  switch (t) {
    case ValueType::Char: return "ch";
    case ValueType::Int: return "in";
    case ValueType::Long: return "lg";
    case ValueType::Float: return "ft";
    case ValueType::Double: return "db";
  }
  return "";
}

inline std::optional<ValueType> value_type_from_suffix(std::string_view s) {
  if (s == "ch") return ValueType::Char;
  if (s == "in") return ValueType::Int;
  if (s == "lg") return ValueType::Long;
  if (s == "ft") return ValueType::Float;
  if (s == "db") return ValueType::Double;
  return std::nullopt;
}

constexpr int byte_size(ValueType t) {
  switch (t) {
    case ValueType::Char: return 1;
    case ValueType::Int: return 4;
    case ValueType::Float: return 4;
    case ValueType::Long: return 8;
    case ValueType::Double: return 8;
  }
  return 4;
}

/// A tagged machine word. Equality is bitwise so that float results compare exactly.
class Value {
 public:
  using Storage = std::variant<std::uint8_t, std::int32_t, std::int64_t, float, double>;

  Value() : v_(std::int32_t{0}) {}
  static Value of_char(std::uint8_t x) { return Value(Storage{std::in_place_index<0>, x}); }
  static Value of_int(std::int32_t x) { return Value(Storage{std::in_place_index<1>, x}); }
  static Value of_long(std::int64_t x) { return Value(Storage{std::in_place_index<2>, x}); }
  static Value of_float(float x) { return Value(Storage{std::in_place_index<3>, x}); }
  static Value of_double(double x) { return Value(Storage{std::in_place_index<4>, x}); }

  static Value zero(ValueType t) {
    switch (t) {
      case ValueType::Char: return of_char(0);
      case ValueType::Int: return of_int(0);
      case ValueType::Long: return of_long(0);
      case ValueType::Float: return of_float(0.0f);
      case ValueType::Double: return of_double(0.0);
    }
    return of_int(0);
  }

  /// 1 or 0 in the given type; used for comparison results.
  static Value boolean(ValueType t, bool b) {
    switch (t) {
      case ValueType::Char: return of_char(b ? 1 : 0);
      case ValueType::Int: return of_int(b ? 1 : 0);
      case ValueType::Long: return of_long(b ? 1 : 0);
      case ValueType::Float: return of_float(b ? 1.0f : 0.0f);
      case ValueType::Double: return of_double(b ? 1.0 : 0.0);
    }
    return of_int(0);
  }

  ValueType type() const { return static_cast<ValueType>(v_.index()); }

  std::uint8_t as_char() const { return std::get<0>(v_); }
  std::int32_t as_int() const { return std::get<1>(v_); }
  std::int64_t as_long() const { return std::get<2>(v_); }
  float as_float() const { return std::get<3>(v_); }
  double as_double() const { return std::get<4>(v_); }

  bool is_zero() const {
    switch (type()) {
      case ValueType::Char: return as_char() == 0;
      case ValueType::Int: return as_int() == 0;
      case ValueType::Long: return as_long() == 0;
      case ValueType::Float: return as_float() == 0.0f;
      case ValueType::Double: return as_double() == 0.0;
    }
    return true;
  }

  /// Integer view for address/size arithmetic; floating values are rejected.
  std::int64_t integral() const {
    switch (type()) {
      case ValueType::Char: return as_char();
      case ValueType::Int: return as_int();
      case ValueType::Long: return as_long();
      default: throw Error(ErrorCode::TypeTagMismatch, "integral value expected");
    }
  }

  double numeric() const {
    switch (type()) {
      case ValueType::Char: return as_char();
      case ValueType::Int: return as_int();
      case ValueType::Long: return static_cast<double>(as_long());
      case ValueType::Float: return as_float();
      case ValueType::Double: return as_double();
    }
    return 0;
  }

  friend bool operator==(const Value& a, const Value& b) {
    if (a.type() != b.type()) return false;
    switch (a.type()) {
      case ValueType::Char: return a.as_char() == b.as_char();
      case ValueType::Int: return a.as_int() == b.as_int();
      case ValueType::Long: return a.as_long() == b.as_long();
      case ValueType::Float:
        return std::bit_cast<std::uint32_t>(a.as_float()) == std::bit_cast<std::uint32_t>(b.as_float());
      case ValueType::Double:
        return std::bit_cast<std::uint64_t>(a.as_double()) ==
               std::bit_cast<std::uint64_t>(b.as_double());
    }
    return false;
  }

  /// Payload text without a type tag; floats print with enough digits to round-trip.
  std::string payload() const {
    char buf[64];
    switch (type()) {
      case ValueType::Char: return std::to_string(as_char());
      case ValueType::Int: return std::to_string(as_int());
      case ValueType::Long: return std::to_string(as_long());
      case ValueType::Float: std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(as_float())); return buf;
      case ValueType::Double: std::snprintf(buf, sizeof buf, "%.17g", as_double()); return buf;
    }
    return "";
  }

  /// "in:5", "ft:2.5", ...
  std::string str() const { return std::string(value_suffix(type())) + ":" + payload(); }

  static std::optional<Value> parse_payload(ValueType t, std::string_view text) {
    std::string s(text);
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    switch (t) {
      case ValueType::Char: {
        long long v = std::strtoll(s.c_str(), &end, 10);
        if (*end || v < 0 || v > 255) return std::nullopt;
        return of_char(static_cast<std::uint8_t>(v));
      }
      case ValueType::Int: {
        long long v = std::strtoll(s.c_str(), &end, 10);
        if (*end || v < INT32_MIN || v > INT32_MAX) return std::nullopt;
        return of_int(static_cast<std::int32_t>(v));
      }
      case ValueType::Long: {
        errno = 0;
        long long v = std::strtoll(s.c_str(), &end, 10);
        if (*end || errno) return std::nullopt;
        return of_long(v);
      }
      case ValueType::Float: {
        float v = std::strtof(s.c_str(), &end);
        if (*end) return std::nullopt;
        return of_float(v);
      }
      case ValueType::Double: {
        double v = std::strtod(s.c_str(), &end);
        if (*end) return std::nullopt;
        return of_double(v);
      }
    }
    return std::nullopt;
  }

  static std::optional<Value> parse(std::string_view text) {
    auto colon = text.find(':');
    if (colon == std::string_view::npos) return std::nullopt;
    auto t = value_type_from_suffix(text.substr(0, colon));
    if (!t) return std::nullopt;
    return parse_payload(*t, text.substr(colon + 1));
  }

 private:
  explicit Value(Storage v) : v_(v) {}
  Storage v_;
};

}  // namespace typeline
