#pragma once

// Operator semantics shared by constant folding, the AST interpreter and the
// lowering. Everything bottoms out in alu.hpp.

#include "typeline/alu.hpp"
#include "typeline/frontend/ast.hpp"

namespace typeline::minic {

inline AluOp alu_of(BinOp op) {
  switch (op) {
    case BinOp::Add: return AluOp::Add;
    case BinOp::Sub: return AluOp::Sub;
    case BinOp::Mul: return AluOp::Mul;
    case BinOp::Div: return AluOp::Div;
    case BinOp::BitAnd: return AluOp::And;
    case BinOp::BitOr: return AluOp::Or;
    case BinOp::BitXor: return AluOp::Xor;
    case BinOp::Shl: return AluOp::Sll;
    case BinOp::Shr: return AluOp::Sra;
    default: throw Error(ErrorCode::TypeError, "operator has no ALU form");
  }
}

inline Cond cond_of(BinOp op) {
  switch (op) {
    case BinOp::Lt: return Cond::Lt;
    case BinOp::Le: return Cond::Le;
    case BinOp::Gt: return Cond::Gt;
    case BinOp::Ge: return Cond::Ge;
    case BinOp::Eq: return Cond::Eq;
    case BinOp::Ne: return Cond::Ne;
    default: throw Error(ErrorCode::TypeError, "operator is not a comparison");
  }
}

inline Value truth(bool b) { return Value::of_int(b ? 1 : 0); }

/// Both operands already carry the common type (logical operators excepted).
inline Value eval_binary(BinOp op, const Value& a, const Value& b) {
  if (is_logical(op)) {
    bool r = op == BinOp::LogAnd ? (!a.is_zero() && !b.is_zero()) : (!a.is_zero() || !b.is_zero());
    return truth(r);
  }
  if (is_comparison(op)) return convert(compare(cond_of(op), a, b), ValueType::Int);
  return apply(alu_of(op), a, b);
}

inline Value eval_unary(UnOp op, const Value& a) {
  switch (op) {
    case UnOp::Neg: return apply(AluOp::Sub, Value::zero(a.type()), a);
    case UnOp::Not: return truth(a.is_zero());
    case UnOp::BitNot: return apply(AluOp::Nor, a, a);
  }
  return a;
}

/// Folds a typed expression built only from literals; nullopt when it
/// references storage or would trap.
inline std::optional<Value> const_eval(const Expr& e) {
  try {
    switch (e.kind) {
      case ExprKind::Literal: return e.literal;
      case ExprKind::Unary: {
        auto a = const_eval(*e.args[0]);
        if (!a) return std::nullopt;
        return eval_unary(e.uop, *a);
      }
      case ExprKind::Binary: {
        auto a = const_eval(*e.args[0]);
        auto b = const_eval(*e.args[1]);
        if (!a || !b) return std::nullopt;
        return eval_binary(e.bop, *a, *b);
      }
      case ExprKind::Convert: {
        auto a = const_eval(*e.args[0]);
        if (!a) return std::nullopt;
        return convert(*a, e.type.value_type());
      }
      default: return std::nullopt;
    }
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace typeline::minic
