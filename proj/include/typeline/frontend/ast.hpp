#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "typeline/value.hpp"

namespace typeline::minic {

enum class BaseType { Void, Char, Int, Long, Float, Double, Struct, Enum };

/// A declared type. `alias` remembers the typedef name it was spelled with.
struct Type {
  BaseType base = BaseType::Int;
  std::string tag;  // struct or enum name
  bool pointer = false;
  std::optional<std::uint32_t> array;
  std::string alias;
  bool is_static = false;
  bool is_const = false;
  bool is_unsigned = false;

  static Type of(BaseType b) {
    Type t;
    t.base = b;
    return t;
  }
  static Type pointer_to(Type t) {
    t.pointer = true;
    t.array.reset();
    return t;
  }

  bool is_void() const { return base == BaseType::Void && !pointer; }
  bool is_struct() const { return base == BaseType::Struct && !pointer && !array; }
  bool is_scalar() const { return !array && (pointer || (base != BaseType::Void && base != BaseType::Struct)); }
  bool is_sdt() const {
    return !pointer && !array &&
           (base == BaseType::Char || base == BaseType::Int || base == BaseType::Float || base == BaseType::Double);
  }
  bool is_integral() const {
    return !pointer && !array &&
           (base == BaseType::Char || base == BaseType::Int || base == BaseType::Long || base == BaseType::Enum);
  }
  bool is_long_class() const { return !array && (pointer || base == BaseType::Long || base == BaseType::Enum); }

  /// Element type of an array, or the pointee of a pointer.
  Type element() const {
    Type t = *this;
    if (t.array) t.array.reset();
    else t.pointer = false;
    t.is_static = t.is_const = false;
    return t;
  }
  Type unqualified() const {
    Type t = *this;
    t.is_static = t.is_const = false;
    t.alias.clear();
    return t;
  }

  /// Machine word type of a scalar value of this type.
  ValueType value_type() const {
    if (pointer) return ValueType::Long;
    switch (base) {
      case BaseType::Char: return ValueType::Char;
      case BaseType::Int: return ValueType::Int;
      case BaseType::Float: return ValueType::Float;
      case BaseType::Double: return ValueType::Double;
      default: return ValueType::Long;
    }
  }

  bool same(const Type& o) const {
    return base == o.base && tag == o.tag && pointer == o.pointer && array == o.array;
  }

  std::string str() const {
    std::string s;
    switch (base) {
      case BaseType::Void: s = "void"; break;
      case BaseType::Char: s = "char"; break;
      case BaseType::Int: s = "int"; break;
      case BaseType::Long: s = "long"; break;
      case BaseType::Float: s = "float"; break;
      case BaseType::Double: s = "double"; break;
      case BaseType::Struct: s = "struct " + tag; break;
      case BaseType::Enum: s = "enum " + tag; break;
    }
    if (pointer) s += "*";
    if (array) s += "[" + std::to_string(*array) + "]";
    return s;
  }
};

enum class BinOp { Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, LogAnd, LogOr, BitAnd, BitOr, BitXor, Shl, Shr };
enum class UnOp { Neg, Not, BitNot };

inline bool is_comparison(BinOp op) { return op >= BinOp::Lt && op <= BinOp::Ne; }
inline bool is_logical(BinOp op) { return op == BinOp::LogAnd || op == BinOp::LogOr; }
inline bool is_bitwise(BinOp op) { return op >= BinOp::BitAnd; }

inline std::string_view to_string(BinOp op) {
  static constexpr std::string_view names[] = {"+", "-", "*", "/", "<", "<=", ">", ">=", "==",
                                               "!=", "&&", "||", "&", "|", "^", "<<", ">>"};
  return names[static_cast<int>(op)];
}

struct VarDecl;
struct Function;

enum class ExprKind { Literal, Var, Index, Field, Unary, Binary, Call, Convert, AddrOf, Deref, New };

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct Expr {
  ExprKind kind = ExprKind::Literal;
  int line = 0;
  int column = 0;

  Value literal;
  std::string name;  // variable, field or callee
  BinOp bop = BinOp::Add;
  UnOp uop = UnOp::Neg;
  std::vector<ExprPtr> args;
  Type cast;          // explicit cast target, or element type of `new`
  bool explicit_cast = false;

  // filled by the type checker
  Type type;
  Type operand_type;  // comparisons and logical ops: type the test is done in
  const VarDecl* decl = nullptr;
  const Function* callee = nullptr;
  std::uint32_t field_index = 0;

  static ExprPtr make(ExprKind k, int line, int column) {
    auto e = std::make_unique<Expr>();
    e->kind = k;
    e->line = line;
    e->column = column;
    return e;
  }
};

struct VarDecl {
  std::string name;
  Type type;
  ExprPtr init;
  int line = 0;
  int column = 0;
  bool global = false;
  bool param = false;
  const Function* owner = nullptr;  // enclosing function, if any
};

enum class StmtKind { Decl, Assign, If, For, While, Block, ExprStmt, Return, Delete, Empty };

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct Stmt {
  StmtKind kind = StmtKind::Empty;
  int line = 0;
  int column = 0;

  std::vector<std::unique_ptr<VarDecl>> decls;  // Decl
  ExprPtr target;                               // Assign lvalue
  ExprPtr value;                                // Assign rhs, ExprStmt, Return, Delete
  std::optional<BinOp> compound;                // `+=` and friends, `++`, `--`
  ExprPtr cond;
  StmtPtr init, step, body, else_body;
  std::vector<StmtPtr> stmts;  // Block

  static StmtPtr make(StmtKind k, int line, int column) {
    auto s = std::make_unique<Stmt>();
    s->kind = k;
    s->line = line;
    s->column = column;
    return s;
  }
};

struct Function {
  std::string name;
  Type ret;
  std::vector<std::unique_ptr<VarDecl>> params;
  StmtPtr body;
  int line = 0;
  int column = 0;
};

struct StructDef {
  std::string name;
  std::vector<std::pair<std::string, Type>> fields;
  int line = 0;
};

struct EnumDef {
  std::string name;
  std::vector<std::pair<std::string, std::int64_t>> items;
  int line = 0;
};

struct TypedefDef {
  std::string name;
  Type type;
  int line = 0;
};

/// One MiniC translation unit. Top-level statements, global declarations
/// included, run in order before `main`.
struct Unit {
  std::vector<StructDef> structs;
  std::vector<EnumDef> enums;
  std::vector<TypedefDef> typedefs;
  std::vector<std::unique_ptr<Function>> functions;
  std::vector<StmtPtr> top;

  const Function* find_function(std::string_view n) const {
    for (const auto& f : functions)
      if (f->name == n) return f.get();
    return nullptr;
  }
  const StructDef* find_struct(std::string_view n) const {
    for (const auto& s : structs)
      if (s.name == n) return &s;
    return nullptr;
  }
};

/// Memory words occupied by a variable of type `t`, with their types.
inline std::vector<ValueType> word_types(const Unit& u, const Type& t) {
  if (t.is_struct()) {
    std::vector<ValueType> out;
    if (const StructDef* s = u.find_struct(t.tag))
      for (const auto& [name, ft] : s->fields) out.push_back(ft.value_type());
    return out;
  }
  return std::vector<ValueType>(t.array ? *t.array : 1, t.value_type());
}

/// Calls inside `e` in the order they run: arguments before the call, left to right.
inline void collect_calls(const Expr& e, std::vector<const Expr*>& out) {
  for (const auto& a : e.args) collect_calls(*a, out);
  if (e.kind == ExprKind::Call) out.push_back(&e);
}

}  // namespace typeline::minic
