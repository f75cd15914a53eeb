#pragma once

// Typed AST -> IR. Every call is inlined with its own frame of symbols, so
// the program becomes one control-flow graph over flat memory. Within a block
// a load of a scalar just stored (or loaded) reuses the register.

#include <algorithm>
#include <map>
#include <set>

#include "typeline/frontend/ast.hpp"
#include "typeline/frontend/ir.hpp"
#include "typeline/frontend/semantics.hpp"
#include "typeline/heap.hpp"

namespace typeline::minic {

struct LowerOptions {
  int unroll = 1;  // for-loops with a constant trip count divisible by this are unrolled
};

class Lowerer {
 public:
  using VReg = ir::VReg;
  using MemRef = ir::MemRef;

  Lowerer(const Unit& u, LowerOptions opts) : u_(u), opts_(opts) {}

  ir::Program run() {
    for (const auto& s : u_.top)
      if (s->kind == StmtKind::Decl)
        for (const auto& d : s->decls) statics_[d.get()] = symbol(d->name, !d->type.pointer, *d);
    for (const auto& f : u_.functions) collect_statics(*f->body, f->name);
    for (const auto& s : u_.top)
      if (s->kind != StmtKind::Decl) collect_statics(*s, "top");

    cur_ = new_block(0);
    frames_.push_back(Frame{"top", {}, 0, std::nullopt});
    for (const auto& s : u_.top) {
      if (s->kind == StmtKind::Decl) {
        for (const auto& d : s->decls)
          if (d->init && !const_eval(*d->init)) {
            hoist(*d->init);
            VReg v = value(*d->init);
            store(MemRef{MemRef::Mode::Direct, statics_.at(d.get()), 0, ir::kNoReg}, v, d->type.value_type(),
                  d->type.is_long_class());
          }
        continue;
      }
      stmt(*s, false);
    }
    if (const Function* m = u_.find_function("main")) {
      Expr call;
      call.kind = ExprKind::Call;
      call.callee = m;
      invoke(call);
    }
    p_.blocks[cur_].term = ir::Terminator{};
    p_.layout();
    if (p_.memory_words >= static_cast<std::uint32_t>(ObjectHeap::kFirstHandle))
      throw Error(ErrorCode::UnsupportedConstruct,
                  "program data needs " + std::to_string(p_.memory_words) + " words, more than the address space");
    return std::move(p_);
  }

 private:
  struct Frame {
    std::string prefix;
    std::map<const VarDecl*, std::uint32_t> vars;
    std::uint32_t ret = 0;
    std::optional<std::uint32_t> exit;
  };

  const Unit& u_;
  LowerOptions opts_;
  ir::Program p_;
  std::uint32_t cur_ = 0;
  int depth_ = 0;
  std::map<const VarDecl*, std::uint32_t> statics_;
  std::vector<Frame> frames_;
  std::map<const Expr*, std::uint32_t> results_;  // call -> its return slot
  std::set<std::string> names_;
  std::map<std::string, int> name_counts_;
  std::map<std::string, int> expansions_;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::pair<VReg, ValueType>> known_;

  // ---- symbols and blocks ----

  std::string unique(const std::string& base) {
    std::string name = base;
    while (!names_.insert(name).second) name = base + "#" + std::to_string(++name_counts_[base]);
    return name;
  }

  std::uint32_t symbol(const std::string& name, bool global, const VarDecl& d) {
    Symbol s;
    s.name = unique(name);
    s.global = global;
    for (ValueType t : word_types(u_, d.type)) s.init.push_back(Value::zero(t));
    if (d.init && (global || d.type.is_static))
      if (auto v = const_eval(*d.init)) s.init[0] = *v;
    p_.symbols.push_back(std::move(s));
    return static_cast<std::uint32_t>(p_.symbols.size() - 1);
  }

  std::uint32_t scalar_symbol(const std::string& name, ValueType t) {
    Symbol s;
    s.name = unique(name);
    s.global = false;
    s.init.push_back(Value::zero(t));
    p_.symbols.push_back(std::move(s));
    return static_cast<std::uint32_t>(p_.symbols.size() - 1);
  }

  void collect_statics(const Stmt& s, const std::string& owner) {
    if (s.kind == StmtKind::Decl)
      for (const auto& d : s.decls)
        if (d->type.is_static) statics_[d.get()] = symbol(owner + "." + d->name, false, *d);
    for (const Stmt* c : {s.init.get(), s.step.get(), s.body.get(), s.else_body.get()})
      if (c) collect_statics(*c, owner);
    for (const auto& c : s.stmts) collect_statics(*c, owner);
  }

  std::uint32_t local(const VarDecl& d) {
    Frame& f = frames_.back();
    if (auto it = f.vars.find(&d); it != f.vars.end()) return it->second;
    return f.vars[&d] = symbol(f.prefix + "." + d.name, false, d);
  }

  std::uint32_t symbol_of(const VarDecl* d) const {
    if (auto it = statics_.find(d); it != statics_.end()) return it->second;
    return frames_.back().vars.at(d);
  }

  std::uint32_t new_block(int depth) {
    p_.blocks.emplace_back();
    p_.blocks.back().loop_depth = depth;
    return static_cast<std::uint32_t>(p_.blocks.size() - 1);
  }

  void switch_to(std::uint32_t b) {
    cur_ = b;
    known_.clear();
  }

  void jump(std::uint32_t target) { p_.blocks[cur_].term = ir::Terminator{ir::TermKind::Jump, ir::kNoReg, target, 0}; }

  void branch(VReg c, std::uint32_t yes, std::uint32_t no) {
    p_.blocks[cur_].term = ir::Terminator{ir::TermKind::Branch, c, yes, no};
  }

  // ---- op emission ----

  VReg emit(ir::Op op) {
    ValueType result = op.type;
    if (op.kind == ir::OpKind::ObjNew) result = ValueType::Int;
    if (op.kind == ir::OpKind::AddrOf) result = ValueType::Long;
    if (op.kind != ir::OpKind::Store && op.kind != ir::OpKind::ObjRelease) op.dst = p_.new_vreg(result);
    if (op.kind == ir::OpKind::Store) {
      if (op.mem.mode == MemRef::Mode::Direct) {
        known_[{op.mem.symbol, op.mem.offset}] = {op.src[0], op.type};
      } else if (op.mem.mode == MemRef::Mode::Indexed) {
        for (auto it = known_.begin(); it != known_.end();)
          it = it->first.first == op.mem.symbol ? known_.erase(it) : std::next(it);
      } else {
        known_.clear();
      }
    }
    p_.blocks[cur_].ops.push_back(op);
    return op.dst;
  }

  VReg imm(const Value& v) {
    ir::Op op;
    op.kind = ir::OpKind::LoadImm;
    op.type = v.type();
    op.nonsdt = v.type() == ValueType::Long;
    op.imm = v;
    return emit(op);
  }

  VReg load(const MemRef& m, ValueType t, bool nonsdt) {
    if (m.mode == MemRef::Mode::Direct)
      if (auto it = known_.find({m.symbol, m.offset}); it != known_.end() && it->second.second == t)
        return it->second.first;
    ir::Op op;
    op.kind = ir::OpKind::Load;
    op.type = t;
    op.nonsdt = nonsdt || t == ValueType::Long || m.mode == MemRef::Mode::Indirect;
    op.mem = m;
    VReg r = emit(op);
    if (m.mode == MemRef::Mode::Direct) known_[{m.symbol, m.offset}] = {r, t};
    return r;
  }

  void store(const MemRef& m, VReg v, ValueType t, bool nonsdt) {
    ir::Op op;
    op.kind = ir::OpKind::Store;
    op.type = t;
    op.nonsdt = nonsdt || t == ValueType::Long || m.mode == MemRef::Mode::Indirect;
    op.mem = m;
    op.src = {v};
    emit(op);
  }

  VReg binop(AluOp a, VReg x, VReg y, ValueType t) {
    ir::Op op;
    op.kind = ir::OpKind::Binop;
    op.type = t;
    op.nonsdt = t == ValueType::Long;
    op.alu = a;
    op.src = {x, y};
    return emit(op);
  }

  VReg compare_op(Cond c, VReg x, VReg y, ValueType t) {
    ir::Op op;
    op.kind = ir::OpKind::Compare;
    op.type = t;
    op.nonsdt = t == ValueType::Long;
    op.cond = c;
    op.src = {x, y};
    return emit(op);
  }

  VReg convert_op(VReg x, ValueType to) {
    const ValueType from = p_.type_of(x);
    if (from == to) return x;
    ir::Op op;
    op.kind = ir::OpKind::Convert;
    op.type = to;
    op.from = from;
    op.nonsdt = from == ValueType::Long || to == ValueType::Long;
    op.src = {x};
    return emit(op);
  }

  /// 1/0 in the operand lane. Integer lanes only have eq, ge, le and lt
  /// forms, so gt swaps its operands and ne flips eq.
  VReg compare(BinOp b, VReg x, VReg y) {
    const ValueType t = p_.type_of(x);
    if (is_floating(t)) return compare_op(cond_of(b), x, y, t);
    switch (b) {
      case BinOp::Gt: return compare_op(Cond::Lt, y, x, t);
      case BinOp::Ne: {
        VReg eq = compare_op(Cond::Eq, x, y, t);
        return binop(AluOp::Xor, eq, imm(Value::boolean(t, true)), t);
      }
      default: return compare_op(cond_of(b), x, y, t);
    }
  }

  VReg to_int(VReg x) { return convert_op(x, ValueType::Int); }

  static bool yields_truth(const Expr& e) {
    return (e.kind == ExprKind::Binary && (is_comparison(e.bop) || is_logical(e.bop))) ||
           (e.kind == ExprKind::Unary && e.uop == UnOp::Not);
  }

  /// Int 0/1: whether `e` is nonzero in its own type.
  VReg truth(const Expr& e) {
    if (yields_truth(e)) return value(e);
    VReg v = value(e);
    return to_int(compare(BinOp::Ne, v, imm(Value::zero(p_.type_of(v)))));
  }

  VReg binary(BinOp b, VReg x, VReg y) {
    if (is_comparison(b)) return to_int(compare(b, x, y));
    return binop(alu_of(b), x, y, p_.type_of(x));
  }

  // ---- expressions ----

  static bool is_memory_read(const Expr& e) {
    return e.kind == ExprKind::Var || e.kind == ExprKind::Index || e.kind == ExprKind::Field ||
           e.kind == ExprKind::Deref;
  }

  MemRef place(const Expr& lv) {
    switch (lv.kind) {
      case ExprKind::Var: return MemRef{MemRef::Mode::Direct, symbol_of(lv.decl), 0, ir::kNoReg};
      case ExprKind::Field: return MemRef{MemRef::Mode::Direct, symbol_of(lv.args[0]->decl), lv.field_index, ir::kNoReg};
      case ExprKind::Index: {
        const std::uint32_t sym = symbol_of(lv.args[0]->decl);
        const Expr& idx = *lv.args[1];
        if (idx.kind == ExprKind::Literal && idx.literal.type() == ValueType::Int && idx.literal.as_int() >= 0 &&
            static_cast<std::uint32_t>(idx.literal.as_int()) < p_.symbols[sym].size())
          return MemRef{MemRef::Mode::Direct, sym, static_cast<std::uint32_t>(idx.literal.as_int()), ir::kNoReg};
        return MemRef{MemRef::Mode::Indexed, sym, 0, value(idx)};
      }
      case ExprKind::Deref: return MemRef{MemRef::Mode::Indirect, 0, 0, value(*lv.args[0])};
      default: throw Error(ErrorCode::TypeError, "not an lvalue");
    }
  }

  static bool struct_field(const Expr& lv) { return lv.kind == ExprKind::Field; }

  VReg value(const Expr& e) {
    switch (e.kind) {
      case ExprKind::Literal: return imm(e.literal);
      case ExprKind::Var:
      case ExprKind::Index:
      case ExprKind::Field:
      case ExprKind::Deref: return load(place(e), e.type.value_type(), struct_field(e));
      case ExprKind::Convert: {
        const Expr& inner = *e.args[0];
        // char widens to int for free on the way in from memory
        if (e.type.value_type() == ValueType::Int && inner.type.value_type() == ValueType::Char && is_memory_read(inner))
          return load(place(inner), ValueType::Int, struct_field(inner));
        return convert_op(value(inner), e.type.value_type());
      }
      case ExprKind::Unary: {
        if (e.uop == UnOp::Not) {
          VReg v = value(*e.args[0]);
          return to_int(compare(BinOp::Eq, v, imm(Value::zero(p_.type_of(v)))));
        }
        VReg v = value(*e.args[0]);
        const ValueType t = p_.type_of(v);
        if (e.uop == UnOp::Neg) return binop(AluOp::Sub, imm(Value::zero(t)), v, t);
        return binop(AluOp::Nor, v, v, t);
      }
      case ExprKind::Binary: {
        if (is_logical(e.bop)) {
          VReg a = truth(*e.args[0]);
          VReg b = truth(*e.args[1]);
          return binop(e.bop == BinOp::LogAnd ? AluOp::And : AluOp::Or, a, b, ValueType::Int);
        }
        VReg a = value(*e.args[0]);
        VReg b = value(*e.args[1]);
        return binary(e.bop, a, b);
      }
      case ExprKind::Call:
        return load(MemRef{MemRef::Mode::Direct, results_.at(&e), 0, ir::kNoReg}, e.type.value_type(), false);
      case ExprKind::AddrOf: {
        ir::Op op;
        op.kind = ir::OpKind::AddrOf;
        op.type = ValueType::Long;
        op.nonsdt = true;
        op.mem = place(*e.args[0]);
        return emit(op);
      }
      case ExprKind::New: {
        VReg n = value(*e.args[0]);
        VReg size = binop(AluOp::Mul, n, imm(Value::of_int(byte_size(e.cast.value_type()))), ValueType::Int);
        ir::Op op;
        op.kind = ir::OpKind::ObjNew;
        op.type = ValueType::Int;
        op.src = {size};
        return convert_op(emit(op), ValueType::Long);
      }
    }
    return ir::kNoReg;
  }

  /// Branch condition: comparisons keep their result in the operand lane.
  VReg condition(const Expr& e) {
    if (e.kind == ExprKind::Binary && is_comparison(e.bop)) {
      VReg a = value(*e.args[0]);
      VReg b = value(*e.args[1]);
      return compare(e.bop, a, b);
    }
    return value(e);
  }

  // ---- calls ----

  void hoist(const Expr& e) {
    std::vector<const Expr*> calls;
    collect_calls(e, calls);
    for (const Expr* c : calls) invoke(*c);
  }

  void invoke(const Expr& call) {
    const Function& f = *call.callee;
    std::vector<VReg> args;
    for (const auto& a : call.args) args.push_back(value(*a));

    Frame fr;
    const int n = expansions_[f.name]++;
    fr.prefix = n == 0 ? f.name : f.name + "#" + std::to_string(n);
    if (!f.ret.is_void()) {
      fr.ret = scalar_symbol(fr.prefix + ".ret", f.ret.value_type());
      results_[&call] = fr.ret;
    }
    frames_.push_back(std::move(fr));
    Frame& top = frames_.back();
    if (!f.ret.is_void() && depth_ > 0) {
      const ValueType t = f.ret.value_type();
      store(MemRef{MemRef::Mode::Direct, top.ret, 0, ir::kNoReg}, imm(Value::zero(t)), t, false);
    }
    for (std::size_t i = 0; i < f.params.size(); ++i) {
      const VarDecl& p = *f.params[i];
      store(MemRef{MemRef::Mode::Direct, local(p), 0, ir::kNoReg}, args[i], p.type.value_type(), false);
    }
    const auto& body = f.body->stmts;
    for (std::size_t i = 0; i < body.size(); ++i)
      stmt(*body[i], i + 1 == body.size() && body[i]->kind == StmtKind::Return);
    if (auto exit = frames_.back().exit) {
      jump(*exit);
      switch_to(*exit);
    }
    frames_.pop_back();
  }

  // ---- statements ----

  void zero_fill(std::uint32_t sym, bool fields) {
    std::map<ValueType, VReg> zeros;
    const auto words = p_.symbols[sym].init;
    for (std::uint32_t i = 0; i < words.size(); ++i) {
      const ValueType t = words[i].type();
      if (!zeros.count(t)) zeros[t] = imm(Value::zero(t));
      store(MemRef{MemRef::Mode::Direct, sym, i, ir::kNoReg}, zeros[t], t, fields);
    }
  }

  void stmt(const Stmt& s, bool tail) {
    switch (s.kind) {
      case StmtKind::Empty: return;
      case StmtKind::Decl:
        for (const auto& d : s.decls) {
          if (d->type.is_static) continue;
          VReg v = ir::kNoReg;
          if (d->init) {
            hoist(*d->init);
            v = value(*d->init);
          }
          const std::uint32_t sym = local(*d);
          if (d->init) {
            store(MemRef{MemRef::Mode::Direct, sym, 0, ir::kNoReg}, v, d->type.value_type(), false);
          } else if (depth_ > 0) {
            // a declaration that runs once finds its storage still zero
            zero_fill(sym, d->type.is_struct());
          }
        }
        return;
      case StmtKind::Assign: {
        hoist(*s.target);
        hoist(*s.value);
        const MemRef m = place(*s.target);
        const ValueType t = s.target->type.value_type();
        VReg v = value(*s.value);
        if (s.compound) v = binary(*s.compound, load(m, t, struct_field(*s.target)), v);
        store(m, v, t, struct_field(*s.target));
        return;
      }
      case StmtKind::If: {
        hoist(*s.cond);
        VReg c = condition(*s.cond);
        const std::uint32_t yes = new_block(depth_);
        const std::uint32_t no = s.else_body ? new_block(depth_) : 0;
        const std::uint32_t join = new_block(depth_);
        branch(c, yes, s.else_body ? no : join);
        switch_to(yes);
        stmt(*s.body, false);
        jump(join);
        if (s.else_body) {
          switch_to(no);
          stmt(*s.else_body, false);
          jump(join);
        }
        switch_to(join);
        return;
      }
      case StmtKind::While: loop(s.cond.get(), nullptr, *s.body, 1); return;
      case StmtKind::For:
        if (s.init) stmt(*s.init, false);
        loop(s.cond.get(), s.step.get(), *s.body, unroll_factor(s));
        return;
      case StmtKind::Block:
        for (const auto& c : s.stmts) stmt(*c, false);
        return;
      case StmtKind::ExprStmt: hoist(*s.value); return;
      case StmtKind::Return: {
        if (s.value) {
          hoist(*s.value);
          VReg v = value(*s.value);
          store(MemRef{MemRef::Mode::Direct, frames_.back().ret, 0, ir::kNoReg}, v, s.value->type.value_type(), false);
        }
        if (tail) return;
        Frame& f = frames_.back();
        if (!f.exit) f.exit = new_block(depth_);
        jump(*f.exit);
        switch_to(new_block(depth_));  // whatever follows is unreachable
        return;
      }
      case StmtKind::Delete: {
        hoist(*s.value);
        VReg h = convert_op(value(*s.value), ValueType::Int);
        ir::Op op;
        op.kind = ir::OpKind::ObjRelease;
        op.type = ValueType::Int;
        op.src = {h};
        emit(op);
        return;
      }
    }
  }

  void loop(const Expr* cond, const Stmt* step, const Stmt& body, int copies) {
    const std::uint32_t head = new_block(depth_ + 1);
    jump(head);
    switch_to(head);
    ++depth_;
    const std::uint32_t inside = new_block(depth_);
    const std::uint32_t after = new_block(depth_ - 1);
    if (cond) {
      hoist(*cond);
      branch(condition(*cond), inside, after);
    } else {
      jump(inside);
    }
    switch_to(inside);
    for (int i = 0; i < copies; ++i) {
      stmt(body, false);
      if (step) stmt(*step, false);
    }
    jump(head);
    --depth_;
    switch_to(after);
  }

  // ---- unrolling ----

  static bool mentions(const Expr& e, const VarDecl* d, bool address_only) {
    if (e.kind == ExprKind::AddrOf && e.args[0]->kind == ExprKind::Var && e.args[0]->decl == d) return true;
    if (!address_only && e.kind == ExprKind::Var && e.decl == d) return true;
    for (const auto& a : e.args)
      if (mentions(*a, d, address_only)) return true;
    return false;
  }

  static bool writes(const Stmt& s, const VarDecl* d) {
    if (s.kind == StmtKind::Assign && s.target->kind == ExprKind::Var && s.target->decl == d) return true;
    for (const Expr* e : {s.target.get(), s.value.get(), s.cond.get()})
      if (e && mentions(*e, d, true)) return true;
    for (const auto& dd : s.decls)
      if (dd->init && mentions(*dd->init, d, true)) return true;
    for (const Stmt* c : {s.init.get(), s.step.get(), s.body.get(), s.else_body.get()})
      if (c && writes(*c, d)) return true;
    for (const auto& c : s.stmts)
      if (writes(*c, d)) return true;
    return false;
  }

  /// Unroll factor for `for (int i = A; i < B; i++)` when the trip count is a
  /// multiple of the configured factor and the body leaves `i` alone.
  int unroll_factor(const Stmt& s) const {
    const int k = opts_.unroll;
    if (k <= 1 || !s.init || !s.cond || !s.step) return 1;
    if (s.init->kind != StmtKind::Decl || s.init->decls.size() != 1) return 1;
    const VarDecl* i = s.init->decls[0].get();
    if (i->type.is_static || !i->type.is_sdt() || i->type.value_type() != ValueType::Int || !i->init ||
        i->init->kind != ExprKind::Literal)
      return 1;
    const Expr& c = *s.cond;
    if (c.kind != ExprKind::Binary || (c.bop != BinOp::Lt && c.bop != BinOp::Le) || c.args[0]->kind != ExprKind::Var ||
        c.args[0]->decl != i || c.args[1]->kind != ExprKind::Literal)
      return 1;
    const Stmt& st = *s.step;
    if (st.kind != StmtKind::Assign || st.target->kind != ExprKind::Var || st.target->decl != i ||
        st.compound != BinOp::Add || st.value->kind != ExprKind::Literal || st.value->literal.as_int() != 1)
      return 1;
    if (writes(*s.body, i)) return 1;
    const std::int64_t lo = i->init->literal.as_int();
    const std::int64_t hi = c.args[1]->literal.as_int() + (c.bop == BinOp::Le ? 1 : 0);
    const std::int64_t trips = std::max<std::int64_t>(0, hi - lo);
    return trips % k == 0 ? k : 1;
  }
};

/// Lowers a type-checked unit: top-level statements, then an inlined `main`.
inline ir::Program lower(const Unit& typed, LowerOptions opts = {}) { return Lowerer(typed, opts).run(); }

}  // namespace typeline::minic
