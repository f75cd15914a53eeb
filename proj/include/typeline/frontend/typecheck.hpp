#pragma once

// Name resolution and typing. Mixed-type operands meet at the lattice maximum
// Char < Int < Float < Double; every implicit conversion becomes an explicit
// Convert node so later stages never see a mixed operation.

#include <functional>
#include <map>
#include <set>

#include "typeline/frontend/ast.hpp"
#include "typeline/frontend/semantics.hpp"

namespace typeline::minic {

/// Result type of a binary operator over SDT operands; comparisons yield int.
inline SdtKind result_type(BinOp op, SdtKind l, SdtKind r) {
  if (is_comparison(op) || is_logical(op)) return SdtKind::Int;
  return promote(l, r);
}

inline std::optional<SdtKind> sdt_of(const Type& t) {
  if (!t.is_sdt()) return std::nullopt;
  return sdt_of(t.value_type());
}

namespace detail {

inline ExprPtr wrap_convert(ExprPtr e, const Type& to, bool explicit_cast) {
  auto c = Expr::make(ExprKind::Convert, e->line, e->column);
  c->cast = to.unqualified();
  c->type = to.unqualified();
  c->explicit_cast = explicit_cast;
  c->args.push_back(std::move(e));
  return c;
}

/// Literal re-typing: an int literal whose value is exact in the target type
/// becomes a literal of that type instead of a conversion.
inline bool retype_literal(Expr& e, const Type& to) {
  if (e.kind != ExprKind::Literal || e.literal.type() != ValueType::Int || !to.is_scalar() || to.pointer)
    return false;
  const std::int32_t v = e.literal.as_int();
  Value out;
  switch (to.value_type()) {
    case ValueType::Char:
      if (v < 0 || v > 255) return false;
      out = Value::of_char(static_cast<std::uint8_t>(v));
      break;
    case ValueType::Long: out = Value::of_long(v); break;
    case ValueType::Float:
      if (static_cast<std::int32_t>(static_cast<float>(v)) != v || std::abs(v) > (1 << 24)) return false;
      out = Value::of_float(static_cast<float>(v));
      break;
    case ValueType::Double: out = Value::of_double(v); break;
    case ValueType::Int: out = e.literal; break;
  }
  e.literal = out;
  e.type = to.unqualified();
  return true;
}

}  // namespace detail

class TypeChecker {
 public:
  explicit TypeChecker(Unit& u) : u_(u) {}

  void run() {
    for (const auto& e : u_.enums)
      for (const auto& [name, v] : e.items) {
        if (enumerators_.count(name)) error(e.line, 1, ErrorCode::TypeError, "enumerator " + name + " redefined");
        enumerators_[name] = {e.name, v};
      }
    {
      std::set<std::string> seen;
      for (const auto& s : u_.structs)
        if (!seen.insert(s.name).second) error(s.line, 1, ErrorCode::TypeError, "struct " + s.name + " redefined");
      seen.clear();
      for (const auto& f : u_.functions)
        if (!seen.insert(f->name).second)
          error(f->line, f->column, ErrorCode::TypeError, "function " + f->name + " redefined");
    }
    for (auto& s : u_.structs)
      for (auto& [fname, ft] : s.fields) guard(s.line, 1, [&] { check_decl_type(ft, s.line, 1); });

    // globals are visible everywhere
    scopes_.emplace_back();
    for (auto& s : u_.top)
      if (s->kind == StmtKind::Decl)
        for (auto& d : s->decls) guard(d->line, d->column, [&] { declare(*d); });

    for (auto& f : u_.functions) guard(f->line, f->column, [&] { check_function(*f); });
    for (auto& s : u_.top) {
      if (s->kind == StmtKind::Decl) {
        for (auto& d : s->decls) guard(d->line, d->column, [&] { check_init(*d); });
      } else {
        guard(s->line, s->column, [&] { check_stmt(*s); });
      }
    }
    if (const Function* m = u_.find_function("main"); m && !m->params.empty())
      error(m->line, m->column, ErrorCode::ArityMismatch, "main takes no parameters");
    check_recursion();
    if (!errors_.empty()) throw Error(std::move(errors_));
  }

 private:
  Unit& u_;
  std::vector<Diagnostic> errors_;
  std::vector<std::map<std::string, const VarDecl*>> scopes_;
  std::map<std::string, std::pair<std::string, std::int64_t>> enumerators_;
  const Function* current_ = nullptr;
  std::map<const Function*, std::vector<const Expr*>> calls_;

  struct Fail {
    Diagnostic d;
  };

  [[noreturn]] static void fail(const Expr& e, ErrorCode code, const std::string& msg) {
    throw Fail{Diagnostic{code, e.line, e.column, msg}};
  }
  [[noreturn]] static void fail(int line, int col, ErrorCode code, const std::string& msg) {
    throw Fail{Diagnostic{code, line, col, msg}};
  }
  void error(int line, int col, ErrorCode code, const std::string& msg) {
    errors_.push_back(Diagnostic{code, line, col, msg});
  }
  template <typename F>
  void guard(int, int, F&& f) {
    try {
      f();
    } catch (Fail& x) {
      errors_.push_back(std::move(x.d));
    } catch (Error& e) {
      for (const auto& d : e.diagnostics()) errors_.push_back(d);
    }
  }

  void check_decl_type(const Type& t, int line, int col) {
    if (t.base == BaseType::Struct) {
      if (!u_.find_struct(t.tag)) fail(line, col, ErrorCode::TypeError, "unknown struct " + t.tag);
      if (t.pointer) fail(line, col, ErrorCode::UnsupportedConstruct, "pointers to structs are not part of MiniC");
      if (t.array) fail(line, col, ErrorCode::UnsupportedConstruct, "arrays of structs are not part of MiniC");
    }
    if (t.base == BaseType::Enum) {
      bool found = false;
      for (const auto& e : u_.enums) found |= e.name == t.tag;
      if (!found) fail(line, col, ErrorCode::TypeError, "unknown enum " + t.tag);
    }
    if (t.base == BaseType::Void && !t.pointer) fail(line, col, ErrorCode::TypeError, "variable of type void");
    if (t.base == BaseType::Void && t.pointer) fail(line, col, ErrorCode::UnsupportedConstruct, "void pointers are not part of MiniC");
    if (t.pointer && t.array) fail(line, col, ErrorCode::UnsupportedConstruct, "arrays of pointers are not part of MiniC");
  }

  void declare(const VarDecl& d) {
    check_decl_type(d.type, d.line, d.column);
    auto& scope = scopes_.back();
    if (scope.count(d.name)) fail(d.line, d.column, ErrorCode::TypeError, "redeclaration of " + d.name);
    scope[d.name] = &d;
  }

  const VarDecl* lookup(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it)
      if (auto f = it->find(name); f != it->end()) return f->second;
    return nullptr;
  }

  // ---- conversions ----

  /// Implicit widenings: the SDT chain, integral into long/enum, and any
  /// non-floating value into float/double.
  static bool implicit_ok(const Type& from, const Type& to) {
    if (from.pointer || to.pointer) return from.pointer && to.pointer && from.base == to.base && from.tag == to.tag;
    if (!from.is_scalar() || !to.is_scalar()) return false;
    const ValueType f = from.value_type(), t = to.value_type();
    if (f == t) return true;
    auto rank = [](ValueType v) {
      switch (v) {
        case ValueType::Char: return 0;
        case ValueType::Int: return 1;
        case ValueType::Long: return 2;
        case ValueType::Float: return 3;
        case ValueType::Double: return 4;
      }
      return 0;
    };
    return rank(f) < rank(t);
  }

  /// Makes `e` have type `to`, inserting the fewest Convert nodes.
  void coerce(ExprPtr& e, const Type& to, bool explicit_cast = false) {
    const Type& from = e->type;
    if (from.same(to.unqualified()) || (from.value_type() == to.value_type() && from.is_scalar() && to.is_scalar() &&
                                        !from.pointer && !to.pointer)) {
      if (!from.same(to.unqualified()) && e->kind == ExprKind::Literal) e->type = to.unqualified();
      return;
    }
    if (!to.is_scalar() || !from.is_scalar())
      fail(*e, ErrorCode::TypeError, "cannot convert " + from.str() + " to " + to.str());
    if (from.pointer || to.pointer) {
      if (implicit_ok(from, to)) return;
      fail(*e, ErrorCode::TypeError, "cannot convert " + from.str() + " to " + to.str());
    }
    if (!explicit_cast && detail::retype_literal(*e, to)) return;
    if (!explicit_cast && !implicit_ok(from, to))
      fail(*e, ErrorCode::TypeError, "narrowing conversion from " + from.str() + " to " + to.str());

    const ValueType f = from.value_type(), t = to.value_type();
    const bool widening = implicit_ok(from, to);
    // char reaches float/double through int
    if (widening && f == ValueType::Char && (t == ValueType::Float || t == ValueType::Double)) {
      e = detail::wrap_convert(std::move(e), Type::of(BaseType::Int), explicit_cast);
    }
    e = detail::wrap_convert(std::move(e), to, explicit_cast);
  }

  /// Common type of a binary operation; NonSdtArithmetic for struct/pointer operands.
  Type common_type(const Expr& at, BinOp op, const Type& l, const Type& r) {
    auto bad = [&](const Type& t) { return t.is_struct() || t.array || t.is_void() || (t.pointer && op != BinOp::Eq && op != BinOp::Ne); };
    if (bad(l) || bad(r))
      fail(at, ErrorCode::NonSdtArithmetic,
           "operator " + std::string(to_string(op)) + " on " + l.str() + " and " + r.str());
    if (l.pointer || r.pointer) {
      if (!(l.pointer && r.pointer && l.base == r.base && l.tag == r.tag))
        fail(at, ErrorCode::NonSdtArithmetic, "comparison of " + l.str() + " with " + r.str());
      return l.unqualified();
    }
    if (auto a = sdt_of(l), b = sdt_of(r); a && b) {
      SdtKind k = promote(*a, *b);
      return Type::of(k == SdtKind::Char ? BaseType::Char
                      : k == SdtKind::Int ? BaseType::Int
                      : k == SdtKind::Float ? BaseType::Float
                                            : BaseType::Double);
    }
    // long or enum involved
    for (const Type* t : {&l, &r})
      if (t->base == BaseType::Double) return Type::of(BaseType::Double);
    for (const Type* t : {&l, &r})
      if (t->base == BaseType::Float) return Type::of(BaseType::Float);
    if (l.base == BaseType::Enum && r.base == BaseType::Enum && l.tag == r.tag) return l.unqualified();
    return Type::of(BaseType::Long);
  }

  // ---- expressions ----

  bool is_lvalue(const Expr& e) const {
    switch (e.kind) {
      case ExprKind::Var: return e.decl && e.type.is_scalar();
      case ExprKind::Index: case ExprKind::Field: case ExprKind::Deref: return true;
      default: return false;
    }
  }

  void check_expr(ExprPtr& e, bool allow_void = false) {
    Expr& x = *e;
    switch (x.kind) {
      case ExprKind::Literal:
        switch (x.literal.type()) {
          case ValueType::Char: x.type = Type::of(BaseType::Char); break;
          case ValueType::Int: x.type = Type::of(BaseType::Int); break;
          case ValueType::Long: x.type = Type::of(BaseType::Long); break;
          case ValueType::Float: x.type = Type::of(BaseType::Float); break;
          case ValueType::Double: x.type = Type::of(BaseType::Double); break;
        }
        return;
      case ExprKind::Var: {
        if (const VarDecl* d = lookup(x.name)) {
          x.decl = d;
          x.type = d->type;
          return;
        }
        if (auto it = enumerators_.find(x.name); it != enumerators_.end()) {
          x.kind = ExprKind::Literal;
          x.literal = Value::of_long(it->second.second);
          x.type = Type::of(BaseType::Enum);
          x.type.tag = it->second.first;
          return;
        }
        fail(x, ErrorCode::UndeclaredVariable, "'" + x.name + "' is not declared");
      }
      case ExprKind::Index: {
        check_expr(x.args[0]);
        check_expr(x.args[1]);
        const Expr& base = *x.args[0];
        if (base.kind != ExprKind::Var || !base.type.array) fail(x, ErrorCode::TypeError, "indexing a non-array");
        if (!x.args[1]->type.is_integral() || x.args[1]->type.value_type() == ValueType::Long)
          fail(*x.args[1], ErrorCode::TypeError, "array index must be int or char");
        coerce(x.args[1], Type::of(BaseType::Int));
        x.type = base.type.element();
        x.type.is_const = base.type.is_const;
        return;
      }
      case ExprKind::Field: {
        check_expr(x.args[0]);
        const Expr& base = *x.args[0];
        if (!base.type.is_struct() || base.kind != ExprKind::Var)
          fail(x, ErrorCode::TypeError, "field access on " + base.type.str());
        const StructDef* s = u_.find_struct(base.type.tag);
        for (std::uint32_t i = 0; i < s->fields.size(); ++i)
          if (s->fields[i].first == x.name) {
            x.field_index = i;
            x.type = s->fields[i].second.unqualified();
            x.type.is_const = base.type.is_const;
            return;
          }
        fail(x, ErrorCode::TypeError, "struct " + s->name + " has no field " + x.name);
      }
      case ExprKind::Unary: {
        check_expr(x.args[0]);
        const Type& t = x.args[0]->type;
        if (!t.is_scalar()) fail(x, ErrorCode::NonSdtArithmetic, "unary operator on " + t.str());
        switch (x.uop) {
          case UnOp::Neg:
            if (t.pointer) fail(x, ErrorCode::NonSdtArithmetic, "negating a pointer");
            x.type = t.unqualified();
            if (x.type.base == BaseType::Enum) x.type = Type::of(BaseType::Long);
            coerce(x.args[0], x.type);
            return;
          case UnOp::Not:
            x.type = Type::of(BaseType::Int);
            x.operand_type = t.unqualified();
            return;
          case UnOp::BitNot:
            if (!t.is_integral()) fail(x, ErrorCode::TypeError, "~ needs an integral operand");
            x.type = t.unqualified();
            if (x.type.base == BaseType::Enum) x.type = Type::of(BaseType::Long);
            coerce(x.args[0], x.type);
            return;
        }
        return;
      }
      case ExprKind::Binary: {
        check_expr(x.args[0]);
        check_expr(x.args[1]);
        const Type l = x.args[0]->type, r = x.args[1]->type;
        if (is_logical(x.bop)) {
          for (const Type* t : {&l, &r})
            if (!t->is_scalar()) fail(x, ErrorCode::NonSdtArithmetic, "logical operator on " + t->str());
          x.type = Type::of(BaseType::Int);
          return;
        }
        Type c = common_type(x, x.bop, l, r);
        if (is_bitwise(x.bop) && !c.is_integral())
          fail(x, ErrorCode::TypeError, "operator " + std::string(to_string(x.bop)) + " needs integral operands");
        // literal operands adopt the other side's type when exact
        coerce(x.args[0], c);
        coerce(x.args[1], c);
        if (is_comparison(x.bop)) {
          x.operand_type = c;
          x.type = Type::of(BaseType::Int);
        } else {
          x.type = c.base == BaseType::Enum ? Type::of(BaseType::Long) : c;
        }
        return;
      }
      case ExprKind::Call: {
        const Function* f = u_.find_function(x.name);
        if (!f) fail(x, ErrorCode::UndeclaredVariable, "function '" + x.name + "' is not declared");
        x.callee = f;
        if (f->params.size() != x.args.size())
          fail(x, ErrorCode::ArityMismatch,
               x.name + " expects " + std::to_string(f->params.size()) + " arguments, got " +
                   std::to_string(x.args.size()));
        for (std::size_t i = 0; i < x.args.size(); ++i) {
          check_expr(x.args[i]);
          coerce(x.args[i], f->params[i]->type);
        }
        if (f->ret.is_void() && !allow_void) fail(x, ErrorCode::TypeError, "void function used as a value");
        x.type = f->ret.unqualified();
        if (current_) calls_[current_].push_back(&x);
        else calls_[nullptr].push_back(&x);
        return;
      }
      case ExprKind::Convert: {
        check_expr(x.args[0]);
        if (!x.cast.is_scalar() || x.cast.is_void()) fail(x, ErrorCode::TypeError, "cast to " + x.cast.str());
        check_decl_type(x.cast, x.line, x.column);
        if (x.args[0]->type.pointer != x.cast.pointer)
          fail(x, ErrorCode::TypeError, "cast between pointer and " + (x.cast.pointer ? x.args[0]->type.str() : x.cast.str()));
        ExprPtr inner = std::move(x.args[0]);
        Type target = x.cast.unqualified();
        coerce(inner, target, true);
        if (!inner->type.same(target)) inner->type = target;  // enum <-> long retag
        e = std::move(inner);
        return;
      }
      case ExprKind::AddrOf: {
        check_expr(x.args[0]);
        const Expr& t = *x.args[0];
        if (!is_lvalue(t) || t.kind == ExprKind::Deref || t.type.pointer)
          fail(x, ErrorCode::TypeError, "cannot take the address of this expression");
        x.type = Type::pointer_to(t.type.unqualified());
        return;
      }
      case ExprKind::Deref: {
        check_expr(x.args[0]);
        if (!x.args[0]->type.pointer) fail(x, ErrorCode::TypeError, "dereferencing a non-pointer");
        x.type = x.args[0]->type.element();
        return;
      }
      case ExprKind::New: {
        check_decl_type(x.cast, x.line, x.column);
        if (!x.cast.is_scalar() || x.cast.pointer) fail(x, ErrorCode::TypeError, "new expects a scalar element type");
        check_expr(x.args[0]);
        if (!x.args[0]->type.is_integral() || x.args[0]->type.value_type() == ValueType::Long)
          fail(*x.args[0], ErrorCode::TypeError, "allocation count must be int or char");
        coerce(x.args[0], Type::of(BaseType::Int));
        x.type = Type::pointer_to(x.cast.unqualified());
        return;
      }
    }
  }

  // ---- statements ----

  void check_init(VarDecl& d) {
    if (!d.init) return;
    if (!d.type.is_scalar()) fail(d.line, d.column, ErrorCode::TypeError, "aggregate " + d.name + " cannot be initialized");
    check_expr(d.init);
    coerce(d.init, d.type);
    if (d.type.is_static && !d.global && !is_constant(*d.init))
      fail(d.line, d.column, ErrorCode::TypeError, "static initializer of " + d.name + " is not constant");
  }

  static bool is_constant(const Expr& e) {
    if (e.kind == ExprKind::Literal) return true;
    if (e.kind == ExprKind::Unary || e.kind == ExprKind::Binary || e.kind == ExprKind::Convert) {
      for (const auto& a : e.args)
        if (!is_constant(*a)) return false;
      return true;
    }
    return false;
  }

  void check_assign_target(Expr& t) {
    if (!is_lvalue(t)) fail(t, ErrorCode::TypeError, "assignment to a non-lvalue");
    if (t.type.is_const) fail(t, ErrorCode::TypeError, "assignment to const");
  }

  void check_stmt(Stmt& s) {
    switch (s.kind) {
      case StmtKind::Empty: return;
      case StmtKind::Decl:
        for (auto& d : s.decls) {
          d->owner = current_;
          check_decl_type(d->type, d->line, d->column);
          check_init(*d);  // initializer sees the enclosing scope, not d itself
          declare(*d);
        }
        return;
      case StmtKind::Assign: {
        check_expr(s.target);
        check_assign_target(*s.target);
        check_expr(s.value);
        if (s.compound) {
          const Type& t = s.target->type;
          if (!t.is_scalar() || t.pointer)
            fail(*s.target, ErrorCode::NonSdtArithmetic, "compound assignment on " + t.str());
          if (is_bitwise(*s.compound) && !t.is_integral())
            fail(*s.target, ErrorCode::TypeError, "bitwise compound assignment on " + t.str());
          Type op_type = t.unqualified();
          if (op_type.base == BaseType::Enum) op_type = Type::of(BaseType::Long);
          coerce(s.value, op_type);
        } else {
          coerce(s.value, s.target->type.unqualified());
        }
        return;
      }
      case StmtKind::If:
        check_cond(s.cond);
        scoped([&] { check_stmt(*s.body); });
        if (s.else_body) scoped([&] { check_stmt(*s.else_body); });
        return;
      case StmtKind::While:
        check_cond(s.cond);
        scoped([&] { check_stmt(*s.body); });
        return;
      case StmtKind::For:
        scoped([&] {
          if (s.init) check_stmt(*s.init);
          if (s.cond) check_cond(s.cond);
          if (s.step) {
            if (s.step->kind == StmtKind::Decl) fail(s.step->line, s.step->column, ErrorCode::SyntaxError, "declaration in for step");
            check_stmt(*s.step);
          }
          scoped([&] { check_stmt(*s.body); });
        });
        return;
      case StmtKind::Block:
        scoped([&] {
          for (auto& c : s.stmts) guard(c->line, c->column, [&] { check_stmt(*c); });
        });
        return;
      case StmtKind::ExprStmt:
        check_expr(s.value, true);
        if (s.value->kind != ExprKind::Call)
          fail(s, ErrorCode::TypeError, "expression statement has no effect");
        return;
      case StmtKind::Return:
        if (!current_) fail(s, ErrorCode::TypeError, "return outside a function");
        if (current_->ret.is_void()) {
          if (s.value) fail(s, ErrorCode::TypeError, "void function returns a value");
          return;
        }
        if (!s.value) fail(s, ErrorCode::TypeError, "missing return value");
        check_expr(s.value);
        coerce(s.value, current_->ret.unqualified());
        return;
      case StmtKind::Delete:
        check_expr(s.value);
        if (!s.value->type.pointer) fail(s, ErrorCode::TypeError, "delete expects a pointer");
        return;
    }
  }

  [[noreturn]] static void fail(const Stmt& s, ErrorCode code, const std::string& msg) {
    throw Fail{Diagnostic{code, s.line, s.column, msg}};
  }

  void check_cond(ExprPtr& c) {
    check_expr(c);
    if (!c->type.is_scalar()) fail(*c, ErrorCode::TypeError, "condition of type " + c->type.str());
  }

  template <typename F>
  void scoped(F&& f) {
    scopes_.emplace_back();
    try {
      f();
    } catch (...) {
      scopes_.pop_back();
      throw;
    }
    scopes_.pop_back();
  }

  void check_function(Function& f) {
    current_ = &f;
    if (f.ret.array || f.ret.is_struct()) fail(f.line, f.column, ErrorCode::UnsupportedConstruct, "functions return scalars");
    if (!f.ret.is_void()) check_decl_type(f.ret, f.line, f.column);
    scoped([&] {
      for (auto& p : f.params) {
        p->owner = &f;
        if (p->type.is_struct()) fail(p->line, p->column, ErrorCode::UnsupportedConstruct, "struct parameters are not part of MiniC");
        if (p->type.is_static) fail(p->line, p->column, ErrorCode::TypeError, "static parameter");
        declare(*p);
      }
      for (auto& c : f.body->stmts) guard(c->line, c->column, [&] { check_stmt(*c); });
    });
    current_ = nullptr;
  }

  void check_recursion() {
    std::map<const Function*, int> state;  // 0 new, 1 on stack, 2 done
    std::function<void(const Function*)> visit = [&](const Function* f) {
      state[f] = 1;
      for (const Expr* c : calls_[f]) {
        if (state[c->callee] == 1) {
          error(c->line, c->column, ErrorCode::UnsupportedConstruct, "recursive call to " + c->callee->name);
          continue;
        }
        if (state[c->callee] == 0) visit(c->callee);
      }
      state[f] = 2;
    };
    for (const auto& f : u_.functions)
      if (state[f.get()] == 0) visit(f.get());
  }
};

/// Resolves names, types every expression and makes conversions explicit.
inline Unit type_check(Unit ast) {
  TypeChecker(ast).run();
  return ast;
}

}  // namespace typeline::minic
