#pragma once

// Typed three-address IR. Variables live in memory symbols; virtual registers
// are local to the block that defines them, which keeps scheduling and
// register allocation strictly per block.

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "typeline/alu.hpp"
#include "typeline/isa.hpp"

namespace typeline::ir {

using VReg = std::uint32_t;
inline constexpr VReg kNoReg = std::numeric_limits<VReg>::max();

enum class OpKind : std::uint8_t { LoadImm, Load, Store, Binop, Compare, Convert, ObjNew, ObjRelease, AddrOf };

constexpr std::string_view to_string(OpKind k) {
  switch (k) {
    case OpKind::LoadImm: return "load-imm";
    case OpKind::Load: return "load";
    case OpKind::Store: return "store";
    case OpKind::Binop: return "binop";
    case OpKind::Compare: return "compare";
    case OpKind::Convert: return "convert";
    case OpKind::ObjNew: return "obj-new";
    case OpKind::ObjRelease: return "obj-release";
    case OpKind::AddrOf: return "addr-of";
  }
  return "?";
}

struct MemRef {
  enum class Mode : std::uint8_t { Direct, Indexed, Indirect };
  Mode mode = Mode::Direct;
  std::uint32_t symbol = 0;
  std::uint32_t offset = 0;  // Direct only
  VReg reg = kNoReg;         // Indexed: int index; Indirect: long pointer

  friend bool operator==(const MemRef&, const MemRef&) = default;
};

/// One three-address op. `type` is the result type, except for Store (the
/// stored type) and Compare (the operand type; the 1/0 result stays in that lane).
struct Op {
  OpKind kind = OpKind::LoadImm;
  ValueType type = ValueType::Int;
  bool nonsdt = false;
  VReg dst = kNoReg;
  std::vector<VReg> src;
  Value imm;
  AluOp alu = AluOp::Add;
  Cond cond = Cond::Eq;
  ValueType from = ValueType::Int;
  MemRef mem;

  friend bool operator==(const Op&, const Op&) = default;

  bool reads_memory() const { return kind == OpKind::Load; }
  bool writes_memory() const { return kind == OpKind::Store; }
  bool touches_heap() const { return kind == OpKind::ObjNew || kind == OpKind::ObjRelease; }

  /// Registers read, address registers included.
  std::vector<VReg> uses() const {
    std::vector<VReg> out = src;
    if ((kind == OpKind::Load || kind == OpKind::Store || kind == OpKind::AddrOf) && mem.reg != kNoReg)
      out.push_back(mem.reg);
    return out;
  }
};

enum class TermKind : std::uint8_t { Exit, Jump, Branch };

struct Terminator {
  TermKind kind = TermKind::Exit;
  VReg cond = kNoReg;         // Branch: nonzero goes to `target`, zero to `alt`
  std::uint32_t target = 0;
  std::uint32_t alt = 0;

  friend bool operator==(const Terminator&, const Terminator&) = default;
};

struct Block {
  std::vector<Op> ops;
  Terminator term;
  int loop_depth = 0;

  friend bool operator==(const Block&, const Block&) = default;
};

/// Symbols carry their initial image; `global` symbols are the program outputs
/// and the only ones inputs may bind to.
struct Program {
  std::vector<Symbol> symbols;
  std::uint32_t memory_words = 0;
  std::vector<Block> blocks;
  std::vector<ValueType> vreg_types;

  friend bool operator==(const Program&, const Program&) = default;

  VReg new_vreg(ValueType t) {
    vreg_types.push_back(t);
    return static_cast<VReg>(vreg_types.size() - 1);
  }
  ValueType type_of(VReg r) const { return vreg_types.at(r); }

  std::size_t op_count() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.ops.size();
    return n;
  }

  /// Lays symbols out from address 1; address 0 stays unmapped so a null
  /// pointer faults.
  void layout() {
    std::uint32_t next = 1;
    for (auto& s : symbols) {
      s.address = next;
      next += s.size();
    }
    memory_words = next;
  }
};

inline std::string vreg_str(VReg r) { return r == kNoReg ? "_" : "v" + std::to_string(r); }

inline std::string mem_str(const Program& p, const MemRef& m) {
  const std::string& name = p.symbols.at(m.symbol).name;
  switch (m.mode) {
    case MemRef::Mode::Direct: return m.offset ? name + "+" + std::to_string(m.offset) : name;
    case MemRef::Mode::Indexed: return name + "[" + vreg_str(m.reg) + "]";
    case MemRef::Mode::Indirect: return "*" + vreg_str(m.reg);
  }
  return "?";
}

inline std::string op_str(const Program& p, const Op& op) {
  std::string s = vreg_str(op.dst) + " = " + std::string(to_string(op.kind)) + "." + std::string(value_suffix(op.type));
  switch (op.kind) {
    case OpKind::LoadImm: s += " " + op.imm.payload(); break;
    case OpKind::Load: s += " " + mem_str(p, op.mem); break;
    case OpKind::Store: s = "store." + std::string(value_suffix(op.type)) + " " + mem_str(p, op.mem) + ", " + vreg_str(op.src[0]); break;
    case OpKind::Binop: s += " " + std::to_string(static_cast<int>(op.alu)) + " " + vreg_str(op.src[0]) + ", " + vreg_str(op.src[1]); break;
    case OpKind::Compare: s += " " + std::string(to_string(op.cond)) + " " + vreg_str(op.src[0]) + ", " + vreg_str(op.src[1]); break;
    case OpKind::Convert: s += " from " + std::string(value_suffix(op.from)) + " " + vreg_str(op.src[0]); break;
    case OpKind::ObjNew: s += " " + vreg_str(op.src[0]); break;
    case OpKind::ObjRelease: s = "obj-release " + vreg_str(op.src[0]); break;
    case OpKind::AddrOf: s += " " + mem_str(p, op.mem); break;
  }
  if (op.nonsdt) s += " !nonsdt";
  return s;
}

inline std::string dump(const Program& p) {
  std::string out;
  for (const auto& s : p.symbols) out += (s.global ? "global " : "local ") + s.name + "[" + std::to_string(s.size()) + "]\n";
  for (std::size_t i = 0; i < p.blocks.size(); ++i) {
    const Block& b = p.blocks[i];
    out += "B" + std::to_string(i) + " (depth " + std::to_string(b.loop_depth) + "):\n";
    for (const auto& op : b.ops) out += "  " + op_str(p, op) + "\n";
    switch (b.term.kind) {
      case TermKind::Exit: out += "  exit\n"; break;
      case TermKind::Jump: out += "  jump B" + std::to_string(b.term.target) + "\n"; break;
      case TermKind::Branch:
        out += "  branch " + vreg_str(b.term.cond) + " B" + std::to_string(b.term.target) + " B" + std::to_string(b.term.alt) + "\n";
        break;
    }
  }
  return out;
}

/// Structural and typing checks: block-local single assignment, operand types,
/// symbol bounds, branch targets. Returns the first problem found.
inline std::optional<std::string> check(const Program& p) {
  std::vector<int> def_block(p.vreg_types.size(), -1);
  auto type_ok = [&](VReg r, ValueType t) { return r < p.vreg_types.size() && p.vreg_types[r] == t; };
  for (std::size_t bi = 0; bi < p.blocks.size(); ++bi) {
    const Block& b = p.blocks[bi];
    auto where = [&](std::size_t i) { return "B" + std::to_string(bi) + " op " + std::to_string(i) + ": "; };
    auto defined_here = [&](VReg r) { return r < def_block.size() && def_block[r] == static_cast<int>(bi); };
    for (std::size_t i = 0; i < b.ops.size(); ++i) {
      const Op& op = b.ops[i];
      for (VReg u : op.uses())
        if (!defined_here(u)) return where(i) + vreg_str(u) + " is not defined earlier in the block";
      const bool has_dst = op.kind != OpKind::Store && op.kind != OpKind::ObjRelease;
      if (has_dst) {
        if (op.dst >= p.vreg_types.size()) return where(i) + "destination out of range";
        if (def_block[op.dst] != -1) return where(i) + vreg_str(op.dst) + " assigned twice";
        def_block[op.dst] = static_cast<int>(bi);
      } else if (op.dst != kNoReg) {
        return where(i) + "op has no destination";
      }
      const std::size_t want_src = op.kind == OpKind::Binop || op.kind == OpKind::Compare ? 2
                                   : op.kind == OpKind::Store || op.kind == OpKind::Convert ||
                                           op.kind == OpKind::ObjNew || op.kind == OpKind::ObjRelease
                                       ? 1
                                       : 0;
      if (op.src.size() != want_src) return where(i) + "wrong operand count";
      if (op.kind == OpKind::Load || op.kind == OpKind::Store || op.kind == OpKind::AddrOf) {
        if (op.mem.mode == MemRef::Mode::Indirect) {
          if (!type_ok(op.mem.reg, ValueType::Long)) return where(i) + "pointer must be long";
          if (op.kind == OpKind::AddrOf) return where(i) + "address of an indirect reference";
        } else {
          if (op.mem.symbol >= p.symbols.size()) return where(i) + "unknown symbol";
          const Symbol& s = p.symbols[op.mem.symbol];
          if (op.mem.mode == MemRef::Mode::Direct && op.mem.offset >= s.size()) return where(i) + "offset outside symbol";
          if (op.mem.mode == MemRef::Mode::Indexed && !type_ok(op.mem.reg, ValueType::Int))
            return where(i) + "index must be int";
        }
      }
      const ValueType dst_t = has_dst ? p.vreg_types[op.dst] : op.type;
      switch (op.kind) {
        case OpKind::LoadImm:
          if (op.imm.type() != op.type || dst_t != op.type) return where(i) + "immediate type";
          break;
        case OpKind::Load:
          if (dst_t != op.type) return where(i) + "load type";
          break;
        case OpKind::Store:
          if (!type_ok(op.src[0], op.type)) return where(i) + "store type";
          break;
        case OpKind::Binop:
          if (dst_t != op.type || !type_ok(op.src[0], op.type) || !type_ok(op.src[1], op.type))
            return where(i) + "binop operand types";
          if (is_floating(op.type) && is_logical(op.alu)) return where(i) + "logical op on floating type";
          break;
        case OpKind::Compare:
          if (dst_t != op.type || !type_ok(op.src[0], op.type) || !type_ok(op.src[1], op.type))
            return where(i) + "compare operand types";
          if (!is_floating(op.type) && (op.cond == Cond::Ne || op.cond == Cond::Gt))
            return where(i) + "integer lanes compare with eq, ge, le or lt only";
          break;
        case OpKind::Convert:
          if (dst_t != op.type || !type_ok(op.src[0], op.from) || op.from == op.type) return where(i) + "convert types";
          break;
        case OpKind::ObjNew:
          if (dst_t != ValueType::Int || !type_ok(op.src[0], ValueType::Int)) return where(i) + "obj-new types";
          break;
        case OpKind::ObjRelease:
          if (!type_ok(op.src[0], ValueType::Int)) return where(i) + "obj-release types";
          break;
        case OpKind::AddrOf:
          if (dst_t != ValueType::Long) return where(i) + "address must be long";
          break;
      }
    }
    const Terminator& t = b.term;
    if (t.kind != TermKind::Exit && t.target >= p.blocks.size()) return "B" + std::to_string(bi) + ": bad jump target";
    if (t.kind == TermKind::Branch) {
      if (t.alt >= p.blocks.size()) return "B" + std::to_string(bi) + ": bad branch target";
      if (!defined_here(t.cond)) return "B" + std::to_string(bi) + ": branch condition not defined in block";
    }
  }
  std::uint32_t next = 1;
  for (const auto& s : p.symbols) {
    if (s.address != next) return "symbol " + s.name + " is not laid out";
    next += s.size();
  }
  if (p.memory_words != next && !p.symbols.empty()) return "memory size does not match layout";
  return std::nullopt;
}

}  // namespace typeline::ir
