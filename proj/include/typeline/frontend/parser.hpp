#pragma once

// Recursive-descent parser for MiniC. Grammar (EBNF) is in README.md.

#include <cerrno>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>

#include "typeline/frontend/ast.hpp"
#include "typeline/frontend/lexer.hpp"

namespace typeline::minic {

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Unit parse_unit() {
    Unit u;
    while (!at(Tok::End)) parse_top(u);
    return u;
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::set<std::string> typedef_names_;
  std::map<std::string, Type> typedef_types_;

  const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
  bool at(Tok k) const { return peek().kind == k; }
  const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }
  bool accept(Tok k) {
    if (!at(k)) return false;
    next();
    return true;
  }

  [[noreturn]] void fail(const Token& t, const std::string& msg, ErrorCode code = ErrorCode::SyntaxError) const {
    throw Error({Diagnostic{code, t.line, t.column, msg}});
  }
  const Token& expect(Tok k, std::string_view what) {
    if (!at(k)) {
      const Token& t = peek();
      fail(t, "expected " + std::string(what) + (t.kind == Tok::End ? " at end of input" : " before '" + t.text + "'"));
    }
    return next();
  }

  bool starts_type(std::size_t k = 0) const {
    switch (peek(k).kind) {
      case Tok::KwInt: case Tok::KwFloat: case Tok::KwDouble: case Tok::KwLong: case Tok::KwChar:
      case Tok::KwVoid: case Tok::KwStruct: case Tok::KwEnum: case Tok::KwStatic: case Tok::KwConst:
      case Tok::KwUnsigned:
        return true;
      case Tok::Ident: return typedef_names_.count(peek(k).text) != 0;
      default: return false;
    }
  }

  /// qualifiers, base type and an optional `*`.
  Type parse_type() {
    Type t;
    bool have_base = false;
    while (true) {
      if (accept(Tok::KwStatic)) t.is_static = true;
      else if (accept(Tok::KwConst)) t.is_const = true;
      else if (accept(Tok::KwUnsigned)) t.is_unsigned = true;
      else break;
    }
    const Token& tk = peek();
    switch (tk.kind) {
      case Tok::KwInt: next(); t.base = BaseType::Int; have_base = true; break;
      case Tok::KwFloat: next(); t.base = BaseType::Float; have_base = true; break;
      case Tok::KwDouble: next(); t.base = BaseType::Double; have_base = true; break;
      case Tok::KwChar: next(); t.base = BaseType::Char; have_base = true; break;
      case Tok::KwVoid: next(); t.base = BaseType::Void; have_base = true; break;
      case Tok::KwLong:
        next();
        accept(Tok::KwInt);
        t.base = BaseType::Long;
        have_base = true;
        break;
      case Tok::KwStruct:
      case Tok::KwEnum:
        next();
        t.base = tk.kind == Tok::KwStruct ? BaseType::Struct : BaseType::Enum;
        t.tag = expect(Tok::Ident, "type name").text;
        have_base = true;
        break;
      case Tok::Ident:
        if (auto it = typedef_types_.find(tk.text); it != typedef_types_.end()) {
          next();
          Type aliased = it->second;
          aliased.is_static |= t.is_static;
          aliased.is_const |= t.is_const;
          aliased.is_unsigned |= t.is_unsigned;
          aliased.alias = tk.text;
          t = aliased;
          have_base = true;
        }
        break;
      default: break;
    }
    while (true) {
      if (accept(Tok::KwConst)) t.is_const = true;
      else if (accept(Tok::KwStatic)) t.is_static = true;
      else break;
    }
    if (!have_base) {
      if (!t.is_unsigned) fail(peek(), "expected a type");
      t.base = BaseType::Int;  // bare `unsigned`
    }
    if (accept(Tok::Star)) t.pointer = true;
    if (at(Tok::Star)) fail(peek(), "pointers to pointers are not part of MiniC", ErrorCode::UnsupportedConstruct);
    return t;
  }

  void parse_top(Unit& u) {
    // struct/enum definitions
    if ((at(Tok::KwStruct) || at(Tok::KwEnum)) && peek(1).kind == Tok::Ident && peek(2).kind == Tok::LBrace) {
      if (at(Tok::KwStruct)) parse_struct_def(u);
      else parse_enum_def(u);
      return;
    }
    if (at(Tok::KwTypedef)) {
      const Token& kw = next();
      Type t = parse_type();
      const Token& name = expect(Tok::Ident, "typedef name");
      expect(Tok::Semi, "';'");
      if (t.is_static) fail(kw, "static typedef");
      t.alias.clear();
      typedef_names_.insert(name.text);
      typedef_types_[name.text] = t;
      u.typedefs.push_back(TypedefDef{name.text, t, kw.line});
      return;
    }
    if (starts_type()) {
      // function definition: type NAME (
      std::size_t save = pos_;
      const Token& first = peek();
      Type t = parse_type();
      if (at(Tok::Ident) && peek(1).kind == Tok::LParen) {
        parse_function(u, t, first);
        return;
      }
      pos_ = save;
      auto s = parse_decl_stmt();
      for (auto& d : s->decls) d->global = true;
      u.top.push_back(std::move(s));
      return;
    }
    u.top.push_back(parse_stmt());
  }

  void parse_struct_def(Unit& u) {
    const Token& kw = next();
    StructDef def;
    def.name = next().text;
    def.line = kw.line;
    expect(Tok::LBrace, "'{'");
    while (!accept(Tok::RBrace)) {
      const Token& ft = peek();
      Type t = parse_type();
      if (!(t.is_sdt() || t.base == BaseType::Long || t.base == BaseType::Enum) || t.pointer || t.is_static)
        fail(ft, "struct fields must be scalar base types", ErrorCode::UnsupportedConstruct);
      do {
        const Token& n = expect(Tok::Ident, "field name");
        if (at(Tok::LBracket)) fail(peek(), "array fields are not part of MiniC", ErrorCode::UnsupportedConstruct);
        def.fields.emplace_back(n.text, t);
      } while (accept(Tok::Comma));
      expect(Tok::Semi, "';'");
    }
    expect(Tok::Semi, "';'");
    if (def.fields.empty()) fail(kw, "empty struct");
    u.structs.push_back(std::move(def));
  }

  void parse_enum_def(Unit& u) {
    const Token& kw = next();
    EnumDef def;
    def.name = next().text;
    def.line = kw.line;
    expect(Tok::LBrace, "'{'");
    std::int64_t v = 0;
    while (!at(Tok::RBrace)) {
      const Token& n = expect(Tok::Ident, "enumerator");
      if (accept(Tok::Assign)) {
        bool neg = accept(Tok::Minus);
        const Token& lit = next();
        if (lit.kind != Tok::IntLit && lit.kind != Tok::LongLit) fail(lit, "enumerator value must be an integer");
        v = std::stoll(lit.text);
        if (neg) v = -v;
      }
      def.items.emplace_back(n.text, v++);
      if (!accept(Tok::Comma)) break;
    }
    expect(Tok::RBrace, "'}'");
    expect(Tok::Semi, "';'");
    u.enums.push_back(std::move(def));
  }

  void parse_function(Unit& u, Type ret, const Token& first) {
    auto fn = std::make_unique<Function>();
    fn->ret = ret;
    fn->name = next().text;
    fn->line = first.line;
    fn->column = first.column;
    expect(Tok::LParen, "'('");
    if (!(at(Tok::KwVoid) && peek(1).kind == Tok::RParen) && !at(Tok::RParen)) {
      do {
        const Token& pt = peek();
        auto p = std::make_unique<VarDecl>();
        p->type = parse_type();
        const Token& n = expect(Tok::Ident, "parameter name");
        if (at(Tok::LBracket)) fail(peek(), "array parameters are not part of MiniC", ErrorCode::UnsupportedConstruct);
        p->name = n.text;
        p->line = pt.line;
        p->column = pt.column;
        p->param = true;
        fn->params.push_back(std::move(p));
      } while (accept(Tok::Comma));
    } else {
      accept(Tok::KwVoid);
    }
    expect(Tok::RParen, "')'");
    if (!at(Tok::LBrace)) fail(peek(), "expected function body");
    fn->body = parse_block();
    u.functions.push_back(std::move(fn));
  }

  StmtPtr parse_decl_stmt() {
    const Token& first = peek();
    auto s = Stmt::make(StmtKind::Decl, first.line, first.column);
    Type base = parse_type();
    bool first_decl = true;
    do {
      Type t = base;
      if (!first_decl) t.pointer = accept(Tok::Star);
      first_decl = false;
      const Token& n = expect(Tok::Ident, "variable name");
      auto d = std::make_unique<VarDecl>();
      d->name = n.text;
      d->line = n.line;
      d->column = n.column;
      if (accept(Tok::LBracket)) {
        const Token& len = next();
        if (len.kind != Tok::IntLit) fail(len, "array length must be an integer literal");
        long long n_elems = std::stoll(len.text);
        if (n_elems <= 0 || n_elems > (1 << 16)) fail(len, "array length out of range");
        t.array = static_cast<std::uint32_t>(n_elems);
        expect(Tok::RBracket, "']'");
        if (at(Tok::LBracket)) fail(peek(), "multi-dimensional arrays are not part of MiniC", ErrorCode::UnsupportedConstruct);
      }
      d->type = t;
      if (accept(Tok::Assign)) {
        if (at(Tok::LBrace)) fail(peek(), "aggregate initializers are not part of MiniC", ErrorCode::UnsupportedConstruct);
        d->init = parse_expr();
      }
      s->decls.push_back(std::move(d));
    } while (accept(Tok::Comma));
    expect(Tok::Semi, "';'");
    return s;
  }

  StmtPtr parse_block() {
    const Token& lb = expect(Tok::LBrace, "'{'");
    auto s = Stmt::make(StmtKind::Block, lb.line, lb.column);
    while (!accept(Tok::RBrace)) {
      if (at(Tok::End)) fail(peek(), "expected '}' at end of input");
      s->stmts.push_back(parse_stmt());
    }
    return s;
  }

  /// Assignment, `x++`, or a bare expression; no trailing ';'.
  StmtPtr parse_simple() {
    const Token& first = peek();
    if (at(Tok::PlusPlus) || at(Tok::MinusMinus)) {
      bool inc = next().kind == Tok::PlusPlus;
      auto s = Stmt::make(StmtKind::Assign, first.line, first.column);
      s->target = parse_unary();
      s->compound = inc ? BinOp::Add : BinOp::Sub;
      s->value = int_literal(1, first);
      return s;
    }
    ExprPtr e = parse_expr();
    std::optional<BinOp> op;
    switch (peek().kind) {
      case Tok::Assign: break;
      case Tok::PlusAssign: op = BinOp::Add; break;
      case Tok::MinusAssign: op = BinOp::Sub; break;
      case Tok::StarAssign: op = BinOp::Mul; break;
      case Tok::SlashAssign: op = BinOp::Div; break;
      case Tok::PlusPlus:
      case Tok::MinusMinus: {
        bool inc = next().kind == Tok::PlusPlus;
        auto s = Stmt::make(StmtKind::Assign, first.line, first.column);
        s->target = std::move(e);
        s->compound = inc ? BinOp::Add : BinOp::Sub;
        s->value = int_literal(1, first);
        return s;
      }
      default: {
        auto s = Stmt::make(StmtKind::ExprStmt, first.line, first.column);
        s->value = std::move(e);
        return s;
      }
    }
    next();
    auto s = Stmt::make(StmtKind::Assign, first.line, first.column);
    s->target = std::move(e);
    s->compound = op;
    s->value = parse_expr();
    return s;
  }

  StmtPtr parse_stmt() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::LBrace: return parse_block();
      case Tok::Semi: next(); return Stmt::make(StmtKind::Empty, t.line, t.column);
      case Tok::KwIf: {
        next();
        auto s = Stmt::make(StmtKind::If, t.line, t.column);
        expect(Tok::LParen, "'('");
        s->cond = parse_expr();
        expect(Tok::RParen, "')'");
        s->body = parse_stmt();
        if (accept(Tok::KwElse)) s->else_body = parse_stmt();
        return s;
      }
      case Tok::KwWhile: {
        next();
        auto s = Stmt::make(StmtKind::While, t.line, t.column);
        expect(Tok::LParen, "'('");
        s->cond = parse_expr();
        expect(Tok::RParen, "')'");
        s->body = parse_stmt();
        return s;
      }
      case Tok::KwFor: {
        next();
        auto s = Stmt::make(StmtKind::For, t.line, t.column);
        expect(Tok::LParen, "'('");
        if (starts_type()) {
          s->init = parse_decl_stmt();  // consumes ';'
        } else {
          if (!at(Tok::Semi)) s->init = parse_simple();
          expect(Tok::Semi, "';'");
        }
        if (!at(Tok::Semi)) s->cond = parse_expr();
        expect(Tok::Semi, "';'");
        if (!at(Tok::RParen)) s->step = parse_simple();
        expect(Tok::RParen, "')'");
        s->body = parse_stmt();
        return s;
      }
      case Tok::KwReturn: {
        next();
        auto s = Stmt::make(StmtKind::Return, t.line, t.column);
        if (!at(Tok::Semi)) s->value = parse_expr();
        expect(Tok::Semi, "';'");
        return s;
      }
      case Tok::KwDelete: {
        next();
        auto s = Stmt::make(StmtKind::Delete, t.line, t.column);
        if (accept(Tok::LBracket)) expect(Tok::RBracket, "']'");
        s->value = parse_expr();
        expect(Tok::Semi, "';'");
        return s;
      }
      case Tok::KwElse: fail(t, "'else' without 'if'");
      case Tok::KwStruct:
      case Tok::KwEnum:
        if (peek(2).kind == Tok::LBrace) fail(t, "type definitions are only allowed at top level");
        return parse_decl_stmt();
      case Tok::KwTypedef: fail(t, "typedef is only allowed at top level");
      default: break;
    }
    if (starts_type()) return parse_decl_stmt();
    auto s = parse_simple();
    expect(Tok::Semi, "';'");
    return s;
  }

  ExprPtr int_literal(std::int32_t v, const Token& at_tok) {
    auto e = Expr::make(ExprKind::Literal, at_tok.line, at_tok.column);
    e->literal = Value::of_int(v);
    return e;
  }

  // ---- expressions, lowest precedence first ----

  ExprPtr parse_expr() { return parse_binary(0); }

  static int precedence(Tok k) {
    switch (k) {
      case Tok::OrOr: return 1;
      case Tok::AndAnd: return 2;
      case Tok::Pipe: return 3;
      case Tok::Caret: return 4;
      case Tok::Amp: return 5;
      case Tok::EqEq: case Tok::NotEq: return 6;
      case Tok::Lt: case Tok::Le: case Tok::Gt: case Tok::Ge: return 7;
      case Tok::Shl: case Tok::Shr: return 8;
      case Tok::Plus: case Tok::Minus: return 9;
      case Tok::Star: case Tok::Slash: return 10;
      default: return -1;
    }
  }

  static BinOp binop_of(Tok k) {
    switch (k) {
      case Tok::OrOr: return BinOp::LogOr;
      case Tok::AndAnd: return BinOp::LogAnd;
      case Tok::Pipe: return BinOp::BitOr;
      case Tok::Caret: return BinOp::BitXor;
      case Tok::Amp: return BinOp::BitAnd;
      case Tok::EqEq: return BinOp::Eq;
      case Tok::NotEq: return BinOp::Ne;
      case Tok::Lt: return BinOp::Lt;
      case Tok::Le: return BinOp::Le;
      case Tok::Gt: return BinOp::Gt;
      case Tok::Ge: return BinOp::Ge;
      case Tok::Shl: return BinOp::Shl;
      case Tok::Shr: return BinOp::Shr;
      case Tok::Plus: return BinOp::Add;
      case Tok::Minus: return BinOp::Sub;
      case Tok::Star: return BinOp::Mul;
      default: return BinOp::Div;
    }
  }

  ExprPtr parse_binary(int min_prec) {
    ExprPtr lhs = parse_unary();
    while (true) {
      int p = precedence(peek().kind);
      if (p < 0 || p < min_prec) break;
      const Token& op = next();
      ExprPtr rhs = parse_binary(p + 1);
      auto e = Expr::make(ExprKind::Binary, op.line, op.column);
      e->bop = binop_of(op.kind);
      e->args.push_back(std::move(lhs));
      e->args.push_back(std::move(rhs));
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr parse_unary() {
    const Token& t = peek();
    auto unary = [&](ExprKind k, UnOp u) {
      next();
      auto e = Expr::make(k, t.line, t.column);
      e->uop = u;
      e->args.push_back(parse_unary());
      return e;
    };
    switch (t.kind) {
      case Tok::Minus: return unary(ExprKind::Unary, UnOp::Neg);
      case Tok::Bang: return unary(ExprKind::Unary, UnOp::Not);
      case Tok::Tilde: return unary(ExprKind::Unary, UnOp::BitNot);
      case Tok::Amp: return unary(ExprKind::AddrOf, UnOp::Neg);
      case Tok::Star: return unary(ExprKind::Deref, UnOp::Neg);
      case Tok::Plus: next(); return parse_unary();
      case Tok::PlusPlus:
      case Tok::MinusMinus:
        fail(t, "increment inside an expression is not part of MiniC", ErrorCode::UnsupportedConstruct);
      case Tok::KwNew: {
        next();
        auto e = Expr::make(ExprKind::New, t.line, t.column);
        e->cast = parse_type();
        if (e->cast.pointer || e->cast.is_static || e->cast.is_void())
          fail(t, "new expects a scalar element type");
        if (accept(Tok::LBracket)) {
          e->args.push_back(parse_expr());
          expect(Tok::RBracket, "']'");
        } else {
          e->args.push_back(int_literal(1, t));
        }
        return e;
      }
      case Tok::LParen:
        if (starts_type(1)) {
          next();
          auto e = Expr::make(ExprKind::Convert, t.line, t.column);
          e->cast = parse_type();
          e->explicit_cast = true;
          expect(Tok::RParen, "')'");
          e->args.push_back(parse_unary());
          return e;
        }
        break;
      default: break;
    }
    return parse_postfix();
  }

  ExprPtr parse_postfix() {
    ExprPtr e = parse_primary();
    while (true) {
      const Token& t = peek();
      if (accept(Tok::LBracket)) {
        auto ix = Expr::make(ExprKind::Index, t.line, t.column);
        ix->args.push_back(std::move(e));
        ix->args.push_back(parse_expr());
        expect(Tok::RBracket, "']'");
        e = std::move(ix);
      } else if (accept(Tok::Dot)) {
        auto f = Expr::make(ExprKind::Field, t.line, t.column);
        f->name = expect(Tok::Ident, "field name").text;
        f->args.push_back(std::move(e));
        e = std::move(f);
      } else if (at(Tok::LParen) && e->kind == ExprKind::Var) {
        next();
        auto c = Expr::make(ExprKind::Call, e->line, e->column);
        c->name = e->name;
        if (!at(Tok::RParen)) {
          do c->args.push_back(parse_expr());
          while (accept(Tok::Comma));
        }
        expect(Tok::RParen, "')'");
        e = std::move(c);
      } else {
        return e;
      }
    }
  }

  ExprPtr parse_primary() {
    const Token& t = next();
    auto lit = [&](Value v) {
      auto e = Expr::make(ExprKind::Literal, t.line, t.column);
      e->literal = v;
      return e;
    };
    switch (t.kind) {
      case Tok::IntLit: {
        errno = 0;
        char* end = nullptr;
        unsigned long long v = std::strtoull(t.text.c_str(), &end, 10);
        if (errno || v > static_cast<unsigned long long>(INT64_MAX)) fail(t, "integer literal too large");
        if (v <= static_cast<unsigned long long>(INT32_MAX)) return lit(Value::of_int(static_cast<std::int32_t>(v)));
        return lit(Value::of_long(static_cast<std::int64_t>(v)));
      }
      case Tok::LongLit: {
        errno = 0;
        char* end = nullptr;
        unsigned long long v = std::strtoull(t.text.c_str(), &end, 10);
        if (errno || v > static_cast<unsigned long long>(INT64_MAX)) fail(t, "integer literal too large");
        return lit(Value::of_long(static_cast<std::int64_t>(v)));
      }
      case Tok::FloatLit: return lit(Value::of_float(std::strtof(t.text.c_str(), nullptr)));
      case Tok::DoubleLit: return lit(Value::of_double(std::strtod(t.text.c_str(), nullptr)));
      case Tok::CharLit: return lit(Value::of_char(static_cast<std::uint8_t>(std::stoi(t.text))));
      case Tok::Ident: {
        auto e = Expr::make(ExprKind::Var, t.line, t.column);
        e->name = t.text;
        return e;
      }
      case Tok::LParen: {
        ExprPtr e = parse_expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::End: fail(t, "unexpected end of input");
      default: fail(t, "unexpected '" + t.text + "'");
    }
  }
};

/// Lexes and parses a MiniC translation unit.
inline Unit parse_minic(std::string_view source) {
  Parser p(lex(source));
  return p.parse_unit();
}

}  // namespace typeline::minic
