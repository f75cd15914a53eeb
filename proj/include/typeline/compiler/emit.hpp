#pragma once

// Assembly emission with per-block, per-register-file linear scan allocation.

#include <map>

#include "typeline/compiler/schedule.hpp"

namespace typeline::compiler {

struct Compiled {
  Program program;
  std::vector<BlockSchedule> schedules;  // what was emitted, per block
  int spill_stores = 0;
  int spill_loads = 0;
};

namespace detail {

/// Spill area appended after the program's memory.
struct SpillArea {
  std::uint32_t base = 0;
  std::vector<Value> words;

  std::uint32_t slot(ValueType t) {
    words.push_back(Value::zero(t));
    return base + static_cast<std::uint32_t>(words.size() - 1);
  }
};

class BlockEmitter {
 public:
  BlockEmitter(const ir::Program& p, std::size_t block, const BlockSchedule& s, const Config& cfg, bool spill,
               SpillArea& area, std::vector<Instruction>& code, int& next_cluster)
      : p_(p), b_(p.blocks[block]), index_(block), s_(s), cfg_(cfg), spill_(spill), area_(area), out_(code),
        next_cluster_(next_cluster) {}

  int stores = 0, loads = 0;

  /// False when the registers run out and spilling is not allowed.
  bool run() {
    for (const Cluster& c : s_.issues)
      for (std::size_t a : c.absorbed) folded_[b_.ops[a].dst] = b_.ops[a].src[0];
    for (std::size_t k = 0; k < s_.issues.size(); ++k) {
      for (ir::VReg u : issue_uses(s_.issues[k])) use_at_[u].push_back(k);
    }
    if (b_.term.kind == ir::TermKind::Branch) use_at_[b_.term.cond].push_back(s_.issues.size());
    check_pressure();

    for (std::size_t k = 0; k < s_.issues.size(); ++k)
      if (!issue(k)) return false;
    if (b_.term.kind == ir::TermKind::Branch) {
      pinned_.clear();
      if (!resident(b_.term.cond, s_.issues.size())) return false;
    }
    return true;
  }

  Reg reg_of(ir::VReg v) const { return where_.at(v); }

 private:
  ir::VReg real(ir::VReg v) const {
    auto it = folded_.find(v);
    return it == folded_.end() ? v : it->second;
  }

  std::vector<ir::VReg> issue_uses(const Cluster& c) const {
    std::vector<ir::VReg> out;
    for (std::size_t m : c.members)
      for (ir::VReg u : b_.ops[m].uses())
        if (std::find(out.begin(), out.end(), real(u)) == out.end()) out.push_back(real(u));
    return out;
  }

  void check_pressure() const {
    for (const Cluster& c : s_.issues) {
      std::array<int, kRegClassCount> need{};
      for (std::size_t m : c.members)
        if (b_.ops[m].dst != ir::kNoReg) ++need[static_cast<int>(cls(b_.ops[m].dst))];
      for (ir::VReg u : issue_uses(c)) ++need[static_cast<int>(cls(u))];
      for (int n : need)
        if (n > kRegistersPerFile)
          throw Error(ErrorCode::RegisterPressure, "a cluster in block " + std::to_string(index_) +
                                                       " needs more than 32 registers in one file");
    }
  }

  RegClass cls(ir::VReg v) const { return reg_class(p_.type_of(v)); }

  std::size_t next_use(ir::VReg v, std::size_t k) const {
    auto it = use_at_.find(v);
    if (it == use_at_.end()) return SIZE_MAX;
    for (std::size_t u : it->second)
      if (u > k) return u;
    return SIZE_MAX;
  }

  std::size_t last_use(ir::VReg v) const {
    auto it = use_at_.find(v);
    return it == use_at_.end() ? 0 : it->second.back();
  }

  Opcode spill_opcode(Op op, ValueType t) const { return typed_or_trad(op, t, false, cfg_.lanes); }

  std::optional<Reg> take(RegClass c, std::size_t k) {
    auto& file = holder_[static_cast<int>(c)];
    for (std::uint8_t i = 0; i < kRegistersPerFile; ++i)
      if (!file[i]) return Reg{c, i};
    if (!spill_) return std::nullopt;
    std::optional<std::uint8_t> victim;
    std::size_t far = 0;
    for (std::uint8_t i = 0; i < kRegistersPerFile; ++i) {
      if (pinned_.count(*file[i])) continue;
      const std::size_t n = next_use(*file[i], k);
      if (!victim || n > far) {
        victim = i;
        far = n;
      }
    }
    if (!victim) throw Error(ErrorCode::RegisterPressure, "no register left to spill");
    const ir::VReg v = *file[*victim];
    const Reg r{c, *victim};
    if (!slot_.count(v)) {
      const ValueType t = p_.type_of(v);
      slot_[v] = area_.slot(t);
      out_.push_back(Instruction{spill_opcode(Op::ST, t), {r, Mem::absolute(slot_[v])}, std::nullopt});
      ++stores;
    }
    where_.erase(v);
    file[*victim].reset();
    return r;
  }

  bool bind(ir::VReg v, std::size_t k) {
    auto r = take(cls(v), k);
    if (!r) return false;
    holder_[static_cast<int>(r->cls)][r->index] = v;
    where_[v] = *r;
    pinned_.insert(v);
    return true;
  }

  bool resident(ir::VReg v, std::size_t k) {
    if (where_.count(v)) {
      pinned_.insert(v);
      return true;
    }
    if (!slot_.count(v)) throw Error(ErrorCode::RegisterPressure, "value " + ir::vreg_str(v) + " was lost");
    if (!bind(v, k)) return false;
    out_.push_back(Instruction{spill_opcode(Op::LD, p_.type_of(v)), {where_[v], Mem::absolute(slot_[v])}, std::nullopt});
    ++loads;
    return true;
  }

  void release(std::size_t k) {
    for (auto it = where_.begin(); it != where_.end();) {
      if (last_use(it->first) <= k) {
        holder_[static_cast<int>(it->second.cls)][it->second.index].reset();
        it = where_.erase(it);
      } else {
        ++it;
      }
    }
  }

  Mem mem(const ir::MemRef& m) const {
    switch (m.mode) {
      case ir::MemRef::Mode::Direct: return Mem::absolute(p_.symbols[m.symbol].address + m.offset);
      case ir::MemRef::Mode::Indexed: {
        const Symbol& s = p_.symbols[m.symbol];
        return Mem::indexed(s.address, reg_of(m.reg), s.size());
      }
      case ir::MemRef::Mode::Indirect: return Mem::indirect(reg_of(m.reg));
    }
    return {};
  }

  Instruction lower(const ir::Op& op) const {
    const Opcode oc = select(op, cfg_.lanes);
    auto src = [&](std::size_t i) { return reg_of(real(op.src[i])); };
    switch (op.kind) {
      case ir::OpKind::LoadImm: return {oc, {reg_of(op.dst), Imm{op.imm}}, std::nullopt};
      case ir::OpKind::Load: return {oc, {reg_of(op.dst), mem(op.mem)}, std::nullopt};
      case ir::OpKind::Store: return {oc, {src(0), mem(op.mem)}, std::nullopt};
      case ir::OpKind::Binop: return {oc, {reg_of(op.dst), src(0), src(1)}, std::nullopt};
      case ir::OpKind::Compare:
        if (oc.op == Op::CMP) return {oc, {reg_of(op.dst), src(0), src(1), CondCode{op.cond}}, std::nullopt};
        return {oc, {reg_of(op.dst), src(0), src(1)}, std::nullopt};
      case ir::OpKind::Convert:
        if (oc.op == Op::CONV) return {oc, {ConvMask{*ConvMask::bit_for(op.from, op.type)}, reg_of(op.dst), src(0)}, std::nullopt};
        return {oc, {reg_of(op.dst), src(0)}, std::nullopt};
      case ir::OpKind::ObjNew: return {oc, {reg_of(op.dst), src(0)}, std::nullopt};
      case ir::OpKind::ObjRelease: return {oc, {src(0)}, std::nullopt};
      case ir::OpKind::AddrOf: return {oc, {reg_of(op.dst), mem(op.mem)}, std::nullopt};
    }
    return {};
  }

  bool issue(std::size_t k) {
    const Cluster& c = s_.issues[k];
    pinned_.clear();
    for (ir::VReg u : issue_uses(c))
      if (!resident(u, k)) return false;
    for (std::size_t m : c.members)
      if (b_.ops[m].dst != ir::kNoReg && !bind(b_.ops[m].dst, k)) return false;

    std::optional<int> tag;
    if (c.grouped()) tag = next_cluster_++;
    auto put = [&](Instruction ins) {
      ins.cluster = tag;
      out_.push_back(std::move(ins));
    };
    if (c.kind == ClusterKind::LoadCluster) put({control(Op::VEN), {VecLen{static_cast<int>(c.members.size())}}, {}});
    if (c.kind == ClusterKind::OpCluster) {
      put({control(Op::PEN), {}, {}});
      if (c.mask.bits) put({control(Op::CONV), {c.mask}, {}});
    }
    for (std::size_t m : c.members) put(lower(b_.ops[m]));
    if (c.kind == ClusterKind::LoadCluster) put({control(Op::VDS), {}, {}});
    if (c.kind == ClusterKind::OpCluster) put({control(Op::PDS), {}, {}});
    release(k);
    return true;
  }

  const ir::Program& p_;
  const ir::Block& b_;
  std::size_t index_;
  const BlockSchedule& s_;
  const Config& cfg_;
  bool spill_;
  SpillArea& area_;
  std::vector<Instruction>& out_;
  int& next_cluster_;

  std::map<ir::VReg, ir::VReg> folded_;
  std::map<ir::VReg, std::vector<std::size_t>> use_at_;
  std::map<ir::VReg, Reg> where_;
  std::map<ir::VReg, std::uint32_t> slot_;
  std::set<ir::VReg> pinned_;
  std::array<std::array<std::optional<ir::VReg>, kRegistersPerFile>, kRegClassCount> holder_{};
};

inline std::string block_label(std::size_t i) { return "B" + std::to_string(i); }

}  // namespace detail

/// Schedules every block, allocates registers and emits assembly. A block whose
/// clustered schedule does not fit the register files is emitted scalar, with
/// spill code if needed.
inline Compiled compile_detailed(const ir::Program& p, const Config& cfg = {}) {
  if (auto problem = ir::check(p)) throw Error(ErrorCode::TypeError, "malformed IR: " + *problem);
  cfg.costs.check();
  Compiled out;
  out.program.symbols = p.symbols;
  detail::SpillArea area{p.memory_words, {}};
  int next_cluster = 0;
  bool need_end = false;
  auto& code = out.program.code;

  for (std::size_t bi = 0; bi < p.blocks.size(); ++bi) {
    const ir::Block& b = p.blocks[bi];
    out.program.labels.push_back(Label{detail::block_label(bi), code.size()});
    BlockSchedule s = schedule_block(b, cfg);
    const std::size_t mark = code.size();
    const int cluster_mark = next_cluster;
    std::optional<Reg> cond;
    {
      detail::BlockEmitter e(p, bi, s, cfg, false, area, code, next_cluster);
      if (e.run()) {
        if (b.term.kind == ir::TermKind::Branch) cond = e.reg_of(b.term.cond);
      } else {
        code.resize(mark);
        next_cluster = cluster_mark;
        s = scalar_schedule(b, cfg);
        s.fell_back = true;
        detail::BlockEmitter spill(p, bi, s, cfg, true, area, code, next_cluster);
        spill.run();
        out.spill_stores += spill.stores;
        out.spill_loads += spill.loads;
        if (b.term.kind == ir::TermKind::Branch) cond = spill.reg_of(b.term.cond);
      }
    }
    out.schedules.push_back(std::move(s));

    const ir::Terminator& t = b.term;
    switch (t.kind) {
      case ir::TermKind::Branch:
        code.push_back({control(Op::BNZ), {*cond, LabelRef{detail::block_label(t.target)}, LabelRef{detail::block_label(t.alt)}}, {}});
        break;
      case ir::TermKind::Jump:
        if (t.target != bi + 1) code.push_back({control(Op::BR), {LabelRef{detail::block_label(t.target)}}, {}});
        break;
      case ir::TermKind::Exit:
        if (bi + 1 != p.blocks.size()) {
          code.push_back({control(Op::BR), {LabelRef{"end"}}, {}});
          need_end = true;
        }
        break;
    }
  }
  if (need_end) out.program.labels.push_back(Label{"end", code.size()});

  out.program.memory_words = p.memory_words;
  if (!area.words.empty()) {
    out.program.symbols.push_back(Symbol{"spill", false, area.base, area.words});
    out.program.memory_words = area.base + static_cast<std::uint32_t>(area.words.size());
  }
  return out;
}

inline Program compile(const ir::Program& p, const Config& cfg = {}) { return compile_detailed(p, cfg).program; }

}  // namespace typeline::compiler
