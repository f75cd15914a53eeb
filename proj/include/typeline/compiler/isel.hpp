#pragma once

// Instruction selection: every IR op becomes exactly one instruction. The
// baseline executor prices IR ops through the same mapping, so a scalar issue
// costs the same in both executors.

#include "typeline/cost.hpp"
#include "typeline/frontend/ir.hpp"

namespace typeline::compiler {

/// Process lines available at compile time. The int line cannot be turned off.
struct LaneConfig {
  bool float_line = true;
  bool double_line = true;
  bool char_line = true;

  bool enabled(ValueType t) const {
    switch (t) {
      case ValueType::Int: return true;
      case ValueType::Float: return float_line;
      case ValueType::Double: return double_line;
      case ValueType::Char: return char_line;
      case ValueType::Long: return false;
    }
    return false;
  }

  friend bool operator==(const LaneConfig&, const LaneConfig&) = default;
};

inline Op alu_opcode(AluOp a) {
  switch (a) {
    case AluOp::Add: return Op::ADD;
    case AluOp::Sub: return Op::SUB;
    case AluOp::Mul: return Op::MUL;
    case AluOp::Div: return Op::DIV;
    case AluOp::And: return Op::AND;
    case AluOp::Or: return Op::OR;
    case AluOp::Xor: return Op::XOR;
    case AluOp::Nor: return Op::NOR;
    case AluOp::Xnor: return Op::XNOR;
    case AluOp::Sra: return Op::SRA;
    case AluOp::Srl: return Op::SRL;
    case AluOp::Sll: return Op::SLL;
  }
  return Op::ADD;
}

/// Integer-lane compare mnemonic for a condition (eq, ge, le, lt).
inline Op compare_opcode(Cond c) {
  switch (c) {
    case Cond::Eq: return Op::CMPE;
    case Cond::Ge: return Op::CMPEG;
    case Cond::Le: return Op::CMPEs;
    case Cond::Lt: return Op::CMPS;
    default: throw Error(ErrorCode::TypeError, "no integer compare for " + std::string(to_string(c)));
  }
}

/// Typed when the operation exists in Table 2 for an enabled line, else the
/// traditional form.
inline Opcode typed_or_trad(Op op, ValueType t, bool nonsdt, const LaneConfig& lanes) {
  Opcode oc = typed(op, t);
  if (!nonsdt && sdt_of(t) && lanes.enabled(t) && is_valid_opcode(oc)) return oc;
  return trad(op, t);
}

inline bool is_tcu_convert(const ir::Op& op, const LaneConfig& lanes) {
  return op.kind == ir::OpKind::Convert && is_tcu_direction(op.from, op.type) && lanes.enabled(op.type) &&
         lanes.enabled(op.from);
}

inline Opcode select(const ir::Op& op, const LaneConfig& lanes = {}) {
  switch (op.kind) {
    case ir::OpKind::LoadImm: return typed_or_trad(Op::MOV, op.type, op.nonsdt, lanes);
    case ir::OpKind::Load:
    case ir::OpKind::Store:
      return typed_or_trad(op.kind == ir::OpKind::Load ? Op::LD : Op::ST, op.type,
                           op.nonsdt || op.mem.mode == ir::MemRef::Mode::Indirect, lanes);
    case ir::OpKind::Binop: return typed_or_trad(alu_opcode(op.alu), op.type, op.nonsdt, lanes);
    case ir::OpKind::Compare:
      return typed_or_trad(is_floating(op.type) ? Op::CMP : compare_opcode(op.cond), op.type, op.nonsdt, lanes);
    case ir::OpKind::Convert: return is_tcu_convert(op, lanes) ? control(Op::CONV) : control(Op::CVT);
    case ir::OpKind::ObjNew: return control(Op::OBJN);
    case ir::OpKind::ObjRelease: return control(Op::OBJR);
    case ir::OpKind::AddrOf: return control(Op::LEA);
  }
  return control(Op::CVT);
}

/// Cycles of an IR op issued alone.
inline int scalar_cost(const ir::Op& op, const CostTable& costs, const LaneConfig& lanes = {}) {
  return costs.cost(select(op, lanes));
}

/// Control instructions that realise a block terminator when blocks are laid
/// out in index order: a branch is one two-way BNZ, a jump to the next block
/// falls through, and an exit that is not last jumps to the end.
inline std::vector<Opcode> terminator_opcodes(const ir::Program& p, std::size_t block) {
  const ir::Terminator& t = p.blocks[block].term;
  const bool last = block + 1 == p.blocks.size();
  switch (t.kind) {
    case ir::TermKind::Branch: return {control(Op::BNZ)};
    case ir::TermKind::Jump:
      if (t.target == block + 1) return {};
      return {control(Op::BR)};
    case ir::TermKind::Exit:
      if (last) return {};
      return {control(Op::BR)};
  }
  return {};
}

}  // namespace typeline::compiler
