#pragma once

// Direct evaluator over the typed AST. It is the reference the lowering is
// tested against, so it shares operator semantics (semantics.hpp) and the
// heap model but none of the IR machinery.
//
// Evaluation order: calls inside a statement run first, innermost and
// leftmost first; the rest of the expression is side-effect free.

#include <map>

#include <json.hpp>

#include "typeline/frontend/semantics.hpp"
#include "typeline/heap.hpp"
#include "typeline/io.hpp"

namespace typeline::minic {

struct InterpOptions {
  std::uint64_t step_limit = 5'000'000;
};

struct InterpResult {
  Outputs outputs;
  ObjectHeap heap;
};

class Interpreter {
 public:
  Interpreter(const Unit& u, InterpOptions opts) : u_(u), opts_(opts) {}

  InterpResult run(const nlohmann::json& inputs) {
    frames_.push_back(&site_frames_[sites_]);
    std::vector<const VarDecl*> globals;
    for (const auto& s : u_.top)
      if (s->kind == StmtKind::Decl)
        for (const auto& d : s->decls) {
          std::size_t id = instantiate(*d);
          statics_[d.get()] = id;
          globals.push_back(d.get());
          if (d->init)
            if (auto v = const_eval(*d->init)) cells_[id][0] = *v;
        }
    for (const auto& f : u_.functions) collect_statics(*f->body);
    for (const auto& s : u_.top)
      if (s->kind != StmtKind::Decl) collect_statics(*s);

    for (auto it = inputs.begin(); it != inputs.end(); ++it) {
      const VarDecl* target = nullptr;
      for (const VarDecl* g : globals)
        if (g->name == it.key() && !g->type.pointer) target = g;
      if (!target) throw Error(ErrorCode::UnboundInput, "no global named " + it.key());
      bind_input(it.value(), cells_[statics_[target]], it.key());
    }

    for (const auto& s : u_.top) {
      if (s->kind == StmtKind::Decl && s->decls.front()->global) {
        for (const auto& d : s->decls)
          if (d->init && !const_eval(*d->init)) {
            Results r;
            hoist(*d->init, r);
            cells_[statics_[d.get()]][0] = eval(*d->init, r);
          }
        continue;
      }
      exec(*s);
    }
    if (const Function* m = u_.find_function("main")) {
      Expr call;
      call.kind = ExprKind::Call;
      call.callee = m;
      Results r;
      invoke(call, r);
    }

    InterpResult out;
    for (const VarDecl* g : globals) {
      if (g->type.pointer) continue;
      const auto& words = cells_[statics_[g]];
      for (std::size_t i = 0; i < words.size(); ++i) out.outputs.emplace_back(output_name(g->name, i, words.size()), words[i]);
    }
    out.heap = heap_;
    return out;
  }

 private:
  using Results = std::map<const Expr*, Value>;
  struct ReturnSignal {};

  const Unit& u_;
  InterpOptions opts_;
  std::vector<std::vector<Value>> cells_;
  std::map<const VarDecl*, std::size_t> statics_;  // globals and static locals
  // One frame per chain of call sites, reused on every visit, the same
  // storage layout the inlining lowering produces.
  using Frame = std::map<const VarDecl*, std::size_t>;
  std::map<std::vector<const Expr*>, Frame> site_frames_;
  std::vector<const Expr*> sites_;
  std::vector<Frame*> frames_;
  std::vector<Value> returns_;
  ObjectHeap heap_;
  std::uint64_t steps_ = 0;

  static constexpr std::int64_t kOffsetBits = 20;

  /// Storage for `d` in the current frame, zeroed.
  std::size_t local(const VarDecl& d) {
    Frame& f = *frames_.back();
    if (auto it = f.find(&d); it != f.end()) {
      for (Value& w : cells_[it->second]) w = Value::zero(w.type());
      return it->second;
    }
    return f[&d] = instantiate(d);
  }

  std::size_t instantiate(const VarDecl& d) {
    std::vector<Value> words;
    for (ValueType t : word_types(u_, d.type)) words.push_back(Value::zero(t));
    cells_.push_back(std::move(words));
    return cells_.size() - 1;
  }

  void collect_statics(const Stmt& s) {
    if (s.kind == StmtKind::Decl)
      for (const auto& d : s.decls)
        if (d->type.is_static) {
          std::size_t id = instantiate(*d);
          statics_[d.get()] = id;
          if (d->init)
            if (auto v = const_eval(*d->init)) cells_[id][0] = *v;
        }
    for (const Stmt* c : {s.init.get(), s.step.get(), s.body.get(), s.else_body.get()})
      if (c) collect_statics(*c);
    for (const auto& c : s.stmts) collect_statics(*c);
  }

  void tick() {
    if (++steps_ > opts_.step_limit) throw Error(ErrorCode::StepLimit, "step limit exceeded");
  }

  std::size_t instance_of(const VarDecl* d) const {
    if (auto it = statics_.find(d); it != statics_.end()) return it->second;
    // only the innermost frame: callers' locals are not in scope
    if (auto f = frames_.back()->find(d); f != frames_.back()->end()) return f->second;
    throw Error(ErrorCode::MemoryFault, "variable " + d->name + " has no storage");
  }

  struct Place {
    std::size_t instance;
    std::size_t offset;
  };

  static Value encode(Place p) {
    return Value::of_long(-((static_cast<std::int64_t>(p.instance) << kOffsetBits) + static_cast<std::int64_t>(p.offset) + 1));
  }
  Place decode(const Value& ptr) const {
    const std::int64_t v = ptr.as_long();
    if (v >= 0) throw Error(ErrorCode::MemoryFault, "dereferencing address " + std::to_string(v));
    const std::int64_t n = -v - 1;
    Place p{static_cast<std::size_t>(n >> kOffsetBits), static_cast<std::size_t>(n & ((1 << kOffsetBits) - 1))};
    if (p.instance >= cells_.size() || p.offset >= cells_[p.instance].size())
      throw Error(ErrorCode::MemoryFault, "dangling pointer");
    return p;
  }

  Place place(const Expr& lv, const Results& r) {
    switch (lv.kind) {
      case ExprKind::Var: return {instance_of(lv.decl), 0};
      case ExprKind::Field: return {instance_of(lv.args[0]->decl), lv.field_index};
      case ExprKind::Index: {
        const std::size_t id = instance_of(lv.args[0]->decl);
        const std::int64_t i = eval(*lv.args[1], r).as_int();
        if (i < 0 || static_cast<std::size_t>(i) >= cells_[id].size())
          throw Error(ErrorCode::MemoryFault, "index " + std::to_string(i) + " outside " + lv.args[0]->decl->name);
        return {id, static_cast<std::size_t>(i)};
      }
      case ExprKind::Deref: return decode(eval(*lv.args[0], r));
      default: throw Error(ErrorCode::TypeError, "not an lvalue");
    }
  }

  Value eval(const Expr& e, const Results& r) {
    switch (e.kind) {
      case ExprKind::Literal: return e.literal;
      case ExprKind::Var:
      case ExprKind::Field:
      case ExprKind::Index:
      case ExprKind::Deref: {
        Place p = place(e, r);
        return load_word(cells_[p.instance][p.offset], e.type.value_type());
      }
      case ExprKind::Unary: return eval_unary(e.uop, eval(*e.args[0], r));
      case ExprKind::Binary: {
        Value a = eval(*e.args[0], r);
        Value b = eval(*e.args[1], r);
        return eval_binary(e.bop, a, b);
      }
      case ExprKind::Convert: return convert(eval(*e.args[0], r), e.type.value_type());
      case ExprKind::Call: return r.at(&e);
      case ExprKind::AddrOf: return encode(place(*e.args[0], r));
      case ExprKind::New: {
        Value n = eval(*e.args[0], r);
        Value bytes = apply(AluOp::Mul, n, Value::of_int(byte_size(e.cast.value_type())));
        return Value::of_long(heap_.obj_new(bytes.as_int()));
      }
    }
    return {};
  }

  void hoist(const Expr& e, Results& r) {
    std::vector<const Expr*> calls;
    collect_calls(e, calls);
    for (const Expr* c : calls) r[c] = invoke(*c, r);
  }

  Value invoke(const Expr& call, Results& r) {
    const Function& f = *call.callee;
    std::vector<Value> args;
    for (const auto& a : call.args) args.push_back(eval(*a, r));
    sites_.push_back(&call);
    frames_.push_back(&site_frames_[sites_]);
    for (std::size_t i = 0; i < f.params.size(); ++i) cells_[local(*f.params[i])][0] = args[i];
    returns_.push_back(f.ret.is_void() ? Value() : Value::zero(f.ret.value_type()));
    try {
      for (const auto& s : f.body->stmts) exec(*s);
    } catch (const ReturnSignal&) {
    }
    Value out = returns_.back();
    returns_.pop_back();
    frames_.pop_back();
    sites_.pop_back();
    return out;
  }

  bool test(const Expr& cond) {
    Results r;
    hoist(cond, r);
    return !eval(cond, r).is_zero();
  }

  void exec(const Stmt& s) {
    tick();
    switch (s.kind) {
      case StmtKind::Empty: return;
      case StmtKind::Decl:
        for (const auto& d : s.decls) {
          if (d->type.is_static) continue;
          Value init;
          if (d->init) {
            Results r;
            hoist(*d->init, r);
            init = eval(*d->init, r);
          }
          std::size_t id = local(*d);
          if (d->init) cells_[id][0] = init;
        }
        return;
      case StmtKind::Assign: {
        Results r;
        hoist(*s.target, r);
        hoist(*s.value, r);
        Place p = place(*s.target, r);
        Value v = eval(*s.value, r);
        if (s.compound) {
          Value cur = load_word(cells_[p.instance][p.offset], s.target->type.value_type());
          v = eval_binary(*s.compound, cur, v);
        }
        cells_[p.instance][p.offset] = v;
        return;
      }
      case StmtKind::If:
        if (test(*s.cond)) exec(*s.body);
        else if (s.else_body) exec(*s.else_body);
        return;
      case StmtKind::While:
        while (test(*s.cond)) {
          exec(*s.body);
          tick();
        }
        return;
      case StmtKind::For:
        if (s.init) exec(*s.init);
        while (!s.cond || test(*s.cond)) {
          exec(*s.body);
          if (s.step) exec(*s.step);
          tick();
        }
        return;
      case StmtKind::Block:
        // scoping was settled by the type checker; locals stay reachable
        // through pointers after their block ends
        for (const auto& c : s.stmts) exec(*c);
        return;
      case StmtKind::ExprStmt: {
        Results r;
        hoist(*s.value, r);
        return;
      }
      case StmtKind::Return: {
        if (s.value) {
          Results r;
          hoist(*s.value, r);
          returns_.back() = eval(*s.value, r);
        }
        throw ReturnSignal{};
      }
      case StmtKind::Delete: {
        Results r;
        hoist(*s.value, r);
        Value p = eval(*s.value, r);
        heap_.obj_release(convert(p, ValueType::Int).as_int());
        return;
      }
    }
  }
};

/// Runs a type-checked unit: top-level statements, then `main` if present.
inline InterpResult interpret(const Unit& typed, const nlohmann::json& inputs = nlohmann::json::object(),
                              InterpOptions opts = {}) {
  return Interpreter(typed, opts).run(inputs);
}

}  // namespace typeline::minic
