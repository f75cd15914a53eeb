#pragma once

// Arithmetic shared by the TYPELINE machine, the sequential baseline and the
// reference interpreters. Every executor routes through these functions, which
// is what makes their outputs bit-identical.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string_view>

#include "typeline/value.hpp"

namespace typeline {

enum class AluOp : std::uint8_t { Add, Sub, Mul, Div, And, Or, Xor, Nor, Xnor, Sra, Srl, Sll };

enum class Cond : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };

constexpr std::string_view to_string(Cond c) {
  switch (c) {
    case Cond::Eq: return "eq";
    case Cond::Ne: return "ne";
    case Cond::Lt: return "lt";
    case Cond::Le: return "le";
    case Cond::Gt: return "gt";
    case Cond::Ge: return "ge";
  }
  return "";
}

inline std::optional<Cond> cond_from_string(std::string_view s) {
  for (Cond c : {Cond::Eq, Cond::Ne, Cond::Lt, Cond::Le, Cond::Gt, Cond::Ge})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

constexpr bool is_logical(AluOp op) {
  return op == AluOp::And || op == AluOp::Or || op == AluOp::Xor || op == AluOp::Nor ||
         op == AluOp::Xnor || op == AluOp::Sra || op == AluOp::Srl || op == AluOp::Sll;
}

namespace detail {

template <typename U, typename S>
S wrap_alu(AluOp op, S a, S b, int width) {
  const U ua = static_cast<U>(a);
  const U ub = static_cast<U>(b);
  const int shift = static_cast<int>(ub & static_cast<U>(width - 1));
  switch (op) {
    case AluOp::Add: return static_cast<S>(static_cast<U>(ua + ub));
    case AluOp::Sub: return static_cast<S>(static_cast<U>(ua - ub));
    case AluOp::Mul: return static_cast<S>(static_cast<U>(ua * ub));
    case AluOp::Div:
      if (b == 0) throw Error(ErrorCode::IntDivisionByZero, "integer division by zero");
      if (std::numeric_limits<S>::is_signed && a == std::numeric_limits<S>::min() && b == S(-1))
        return a;
      return static_cast<S>(a / b);
    case AluOp::And: return static_cast<S>(ua & ub);
    case AluOp::Or: return static_cast<S>(ua | ub);
    case AluOp::Xor: return static_cast<S>(ua ^ ub);
    case AluOp::Nor: return static_cast<S>(static_cast<U>(~(ua | ub)));
    case AluOp::Xnor: return static_cast<S>(static_cast<U>(~(ua ^ ub)));
    case AluOp::Sra:
      if constexpr (std::numeric_limits<S>::is_signed) return static_cast<S>(a >> shift);
      else return static_cast<S>(ua >> shift);
    case AluOp::Srl: return static_cast<S>(static_cast<U>(ua >> shift));
    case AluOp::Sll: return static_cast<S>(static_cast<U>(ua << shift));
  }
  return a;
}

template <typename F>
F float_alu(AluOp op, F a, F b) {
  switch (op) {
    case AluOp::Add: return a + b;
    case AluOp::Sub: return a - b;
    case AluOp::Mul: return a * b;
    case AluOp::Div: return a / b;
    default: throw Error(ErrorCode::TypeError, "logical operation on floating operands");
  }
}

template <typename T>
bool compare(Cond c, T a, T b) {
  switch (c) {
    case Cond::Eq: return a == b;
    case Cond::Ne: return a != b;
    case Cond::Lt: return a < b;
    case Cond::Le: return a <= b;
    case Cond::Gt: return a > b;
    case Cond::Ge: return a >= b;
  }
  return false;
}

template <typename I>
I float_to_int(double v) {
  if (std::isnan(v)) return 0;
  if (v <= static_cast<double>(std::numeric_limits<I>::min())) return std::numeric_limits<I>::min();
  if (v >= static_cast<double>(std::numeric_limits<I>::max())) return std::numeric_limits<I>::max();
  return static_cast<I>(v);
}

}  // namespace detail

/// Binary operation over two values of the same type.
inline Value apply(AluOp op, const Value& a, const Value& b) {
  if (a.type() != b.type()) throw Error(ErrorCode::TypeTagMismatch, "ALU operands differ in type");
  switch (a.type()) {
    case ValueType::Char: {
      // unsigned 8-bit: Sra and Srl coincide
      auto r = detail::wrap_alu<std::uint8_t, std::uint8_t>(op, a.as_char(), b.as_char(), 8);
      return Value::of_char(r);
    }
    case ValueType::Int:
      return Value::of_int(detail::wrap_alu<std::uint32_t, std::int32_t>(op, a.as_int(), b.as_int(), 32));
    case ValueType::Long:
      return Value::of_long(detail::wrap_alu<std::uint64_t, std::int64_t>(op, a.as_long(), b.as_long(), 64));
    case ValueType::Float: return Value::of_float(detail::float_alu(op, a.as_float(), b.as_float()));
    case ValueType::Double: return Value::of_double(detail::float_alu(op, a.as_double(), b.as_double()));
  }
  return a;
}

/// Comparison; the 1/0 result carries the operand type.
inline Value compare(Cond c, const Value& a, const Value& b) {
  if (a.type() != b.type()) throw Error(ErrorCode::TypeTagMismatch, "compare operands differ in type");
  bool r = false;
  switch (a.type()) {
    case ValueType::Char: r = detail::compare(c, a.as_char(), b.as_char()); break;
    case ValueType::Int: r = detail::compare(c, a.as_int(), b.as_int()); break;
    case ValueType::Long: r = detail::compare(c, a.as_long(), b.as_long()); break;
    case ValueType::Float: r = detail::compare(c, a.as_float(), b.as_float()); break;
    case ValueType::Double: r = detail::compare(c, a.as_double(), b.as_double()); break;
  }
  return Value::boolean(a.type(), r);
}

/// The three widenings the type conversion unit implements.
constexpr bool is_tcu_direction(ValueType from, ValueType to) {
  return (from == ValueType::Int && to == ValueType::Float) ||
         (from == ValueType::Int && to == ValueType::Double) ||
         (from == ValueType::Float && to == ValueType::Double);
}

/// General conversion. Widenings are exact or round-to-nearest-even; narrowing
/// truncates integers and saturates float-to-integer (NaN becomes 0).
inline Value convert(const Value& v, ValueType to) {
  if (v.type() == to) return v;
  switch (to) {
    case ValueType::Char:
      if (is_floating(v.type())) return Value::of_char(static_cast<std::uint8_t>(detail::float_to_int<std::int32_t>(v.numeric())));
      return Value::of_char(static_cast<std::uint8_t>(v.integral()));
    case ValueType::Int:
      if (is_floating(v.type())) return Value::of_int(detail::float_to_int<std::int32_t>(v.numeric()));
      return Value::of_int(static_cast<std::int32_t>(static_cast<std::uint32_t>(v.integral())));
    case ValueType::Long:
      if (is_floating(v.type())) return Value::of_long(detail::float_to_int<std::int64_t>(v.numeric()));
      return Value::of_long(v.integral());
    case ValueType::Float:
      switch (v.type()) {
        case ValueType::Char: return Value::of_float(static_cast<float>(v.as_char()));
        case ValueType::Int: return Value::of_float(static_cast<float>(v.as_int()));
        case ValueType::Long: return Value::of_float(static_cast<float>(v.as_long()));
        case ValueType::Double: return Value::of_float(static_cast<float>(v.as_double()));
        default: break;
      }
      break;
    case ValueType::Double:
      switch (v.type()) {
        case ValueType::Char: return Value::of_double(static_cast<double>(v.as_char()));
        case ValueType::Int: return Value::of_double(static_cast<double>(v.as_int()));
        case ValueType::Long: return Value::of_double(static_cast<double>(v.as_long()));
        case ValueType::Float: return Value::of_double(static_cast<double>(v.as_float()));
        default: break;
      }
      break;
  }
  return v;
}

/// Read a memory word as `want`. A char word read as int is a free widening.
inline Value load_word(const Value& word, ValueType want) {
  if (word.type() == want) return word;
  if (want == ValueType::Int && word.type() == ValueType::Char) return convert(word, ValueType::Int);
  throw Error(ErrorCode::TypeTagMismatch, "memory word holds " + word.str() + ", load expects " +
                                              std::string(value_suffix(want)));
}

}  // namespace typeline
