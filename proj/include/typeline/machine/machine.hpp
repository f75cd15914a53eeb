#pragma once

// Cycle-level simulator of the clustered machine. Each loop iteration of
// Runner::run is one issue: a whole VEN/PEN group, or a single instruction.

#include <array>
#include <set>
#include <unordered_map>

#include "typeline/alu.hpp"
#include "typeline/cost.hpp"
#include "typeline/heap.hpp"
#include "typeline/machine/memory.hpp"
#include "typeline/machine/trace.hpp"
#include "typeline/validate.hpp"

namespace typeline::machine {

struct RunOptions {
  CostTable costs = CostTable::defaults();
  bool keep_records = true;
  bool strict_lanes = false;  // throw LaneDisabledAtRuntime instead of re-routing
  std::uint64_t max_issues = 50'000'000;
  ValidateOptions validation;
};

class MachineState {
 public:
  explicit MachineState(std::vector<Value> memory) : memory(std::move(memory)) {
    for (int c = 0; c < kRegClassCount; ++c) regs[c].fill(Value::zero(class_type(static_cast<RegClass>(c))));
    line_on.fill(true);
    vector_mode.fill(false);
  }

  std::array<std::array<Value, kRegistersPerFile>, kRegClassCount> regs;
  std::array<bool, kRegClassCount> line_on{};
  std::array<bool, kRegClassCount> vector_mode{};
  bool parallel = false;
  ConvMask conv;
  std::vector<Value> memory;
  ObjectHeap heap;
  std::uint64_t cycles = 0;

  void set_line(SdtKind k, bool enabled) {
    if (k == SdtKind::Int && !enabled) throw Error(ErrorCode::ProtectedLane, "the int line cannot be disabled");
    line_on[static_cast<int>(reg_class(k))] = enabled;
  }

  bool lane_enabled(ValueType t) const { return line_on[static_cast<int>(reg_class(t))]; }

  const Value& read(const Reg& r) const { return regs[static_cast<int>(r.cls)][r.index]; }

  void write(const Reg& r, const Value& v) {
    if (v.type() != class_type(r.cls))
      throw Error(ErrorCode::TypeTagMismatch, "writing " + v.str() + " into " + r.str());
    regs[static_cast<int>(r.cls)][r.index] = v;
  }

  std::uint32_t address(const Mem& m) const {
    switch (m.mode) {
      case Mem::Mode::Absolute: return checked_address(m.address, memory.size());
      case Mem::Mode::Indexed: return checked_index(m.address, read(m.reg).as_int(), m.length, memory.size());
      case Mem::Mode::Indirect: return checked_address(read(m.reg).as_long(), memory.size());
    }
    return 0;
  }
};

inline AluOp alu_of(Op op) {
  switch (op) {
    case Op::ADD: return AluOp::Add;
    case Op::SUB: return AluOp::Sub;
    case Op::MUL: return AluOp::Mul;
    case Op::DIV: return AluOp::Div;
    case Op::AND: return AluOp::And;
    case Op::OR: return AluOp::Or;
    case Op::XOR: return AluOp::Xor;
    case Op::NOR: return AluOp::Nor;
    case Op::XNOR: return AluOp::Xnor;
    case Op::SRA: return AluOp::Sra;
    case Op::SRL: return AluOp::Srl;
    case Op::SLL: return AluOp::Sll;
    default: throw Error(ErrorCode::MalformedOperand, std::string(op_name(op)) + " is not an ALU operation");
  }
}

inline Cond cond_of(const Instruction& ins) {
  switch (ins.opcode.op) {
    case Op::CMPE: return Cond::Eq;
    case Op::CMPEG: return Cond::Ge;
    case Op::CMPEs: return Cond::Le;
    case Op::CMPS: return Cond::Lt;
    default: return std::get<CondCode>(ins.operands.at(3)).cond;
  }
}

/// Widening through the type conversion unit under a mask.
inline Value tcu_convert(const Value& v, ValueType to, ConvMask mask) {
  if (!is_tcu_direction(v.type(), to))
    throw Error(ErrorCode::UnsupportedConversion, std::string(value_suffix(v.type())) + " to " +
                                                      std::string(value_suffix(to)) + " is not a TCU conversion");
  if (!mask.allows(v.type(), to))
    throw Error(ErrorCode::ConversionDisabled, "CONV mask " + mask.str() + " does not enable " +
                                                   std::string(value_suffix(v.type())) + " to " +
                                                   std::string(value_suffix(to)));
  return convert(v, to);
}

namespace detail {

struct Write {
  Reg dst;
  Value value;
};

class Runner {
 public:
  Runner(const Program& prog, const nlohmann::json& inputs, const RunOptions& opts)
      : prog_(prog),
        opts_(opts),
        st_(build_memory(prog.symbols, prog.memory_words, inputs)),
        trace_(opts.keep_records) {
    for (const auto& l : prog.labels) labels_.emplace(l.name, l.index);
    GroupScan scan = scan_groups(prog);
    for (const auto& g : scan.groups) groups_.emplace(g.open, g);
  }

  ExecTrace run() {
    std::size_t pc = 0;
    std::uint64_t issued = 0;
    while (pc < prog_.code.size()) {
      if (++issued > opts_.max_issues) throw Error(ErrorCode::StepLimit, "issue limit reached");
      if (auto g = groups_.find(pc); g != groups_.end()) {
        g->second.kind == Group::Kind::Load ? load_group(g->second) : op_group(g->second);
        pc = g->second.close + 1;
      } else {
        pc = single(pc);
      }
    }
    ExecTrace out;
    trace_.finish(out);
    st_.cycles = out.totals.cycles;
    out.outputs = collect_outputs(prog_.symbols, st_.memory);
    out.heap = st_.heap;
    out.memory = st_.memory;
    for (const auto& file : st_.regs) out.registers.emplace_back(file.begin(), file.end());
    return out;
  }

 private:
  int cost(const Opcode& oc) const { return opts_.costs.cost(oc); }

  void control(const Opcode& oc) { trace_.add(IssueRecord{0, cost(oc), IssueKind::Control, 0, 0, 0, 0, 0}); }

  void lane_off(const Instruction& ins) {
    if (opts_.strict_lanes)
      throw Error(ErrorCode::LaneDisabledAtRuntime, ins.str() + " arrived while its line is disabled");
    trace_.rerouted(1);
  }

  Value operand(const Instruction& ins, std::size_t i, ValueType t, ConvMask mask) const {
    const Value& v = st_.read(std::get<Reg>(ins.operands[i]));
    return v.type() == t ? v : tcu_convert(v, t, mask);
  }

  /// Result of an ALU instruction without committing it.
  Write alu(const Instruction& ins, ConvMask mask) const {
    const ValueType t = *ins.opcode.type;
    Value a = operand(ins, 1, t, mask), b = operand(ins, 2, t, mask);
    Value r = ins.opcode.is_compare() ? compare(cond_of(ins), a, b) : apply(alu_of(ins.opcode.op), a, b);
    return Write{std::get<Reg>(ins.operands[0]), r};
  }

  Write load(const Instruction& ins) const {
    const Mem& m = std::get<Mem>(ins.operands[1]);
    return Write{std::get<Reg>(ins.operands[0]), load_word(st_.memory[st_.address(m)], *ins.opcode.type)};
  }

  void commit(const std::vector<Write>& ws) {
    for (const auto& w : ws) st_.write(w.dst, w.value);
  }

  void load_group(const Group& g) {
    control(prog_.code[g.open].opcode);
    const Opcode& first = prog_.code[g.members.front()].opcode;
    const RegClass lane = reg_class(*first.type);
    st_.vector_mode[static_cast<int>(lane)] = true;
    if (st_.lane_enabled(*first.type)) {
      std::vector<Write> ws;
      int c = 0;
      for (std::size_t m : g.members) {
        ws.push_back(load(prog_.code[m]));
        c = std::max(c, cost(prog_.code[m].opcode));
      }
      commit(ws);
      const int n = static_cast<int>(g.members.size());
      trace_.add(IssueRecord{0, c, IssueKind::LoadCluster, n, lane_bit(lane), n, 0, 0});
    } else {
      for (std::size_t m : g.members) {
        const Instruction& ins = prog_.code[m];
        lane_off(ins);
        commit({load(ins)});
        trace_.add(IssueRecord{0, cost(trad(Op::LD, *ins.opcode.type)), IssueKind::Traditional, 1,
                               lane_bit(RegClass::Trad), 1, 0, 1});
      }
    }
    st_.vector_mode[static_cast<int>(lane)] = false;
    control(prog_.code[g.close].opcode);
  }

  void op_group(const Group& g) {
    control(prog_.code[g.open].opcode);
    st_.parallel = true;
    if (g.conv) st_.conv = *prog_.code[*g.conv].conv_mask();

    // Conversions folded into the cluster: one per distinct (source, target lane).
    std::set<std::pair<std::pair<int, int>, ValueType>> seen;
    auto absorbed = [&](const Instruction& ins) {
      int n = 0;
      for (std::size_t i = 1; i < 3; ++i) {
        const Reg& r = std::get<Reg>(ins.operands[i]);
        if (r.cls != reg_class(*ins.opcode.type) &&
            seen.insert({{static_cast<int>(r.cls), r.index}, *ins.opcode.type}).second)
          ++n;
      }
      return n;
    };

    std::vector<Write> ws;
    std::vector<std::size_t> off;
    int c = 0, members = 0, computes = 0;
    LaneSet lanes = 0;
    for (std::size_t m : g.members) {
      const Instruction& ins = prog_.code[m];
      if (!st_.lane_enabled(*ins.opcode.type)) {
        off.push_back(m);
        continue;
      }
      ws.push_back(alu(ins, st_.conv));
      c = std::max(c, cost(ins.opcode));
      members += 1 + absorbed(ins);
      ++computes;
      lanes |= lane_bit(reg_class(*ins.opcode.type));
    }
    std::vector<Write> late;
    for (std::size_t m : off) late.push_back(alu(prog_.code[m], st_.conv));
    commit(ws);
    commit(late);
    if (g.conv) c += cost(prog_.code[*g.conv].opcode);
    if (computes > 0) trace_.add(IssueRecord{0, c, IssueKind::OpCluster, members, lanes, 0, computes, 0});
    else if (g.conv) control(prog_.code[*g.conv].opcode);
    for (std::size_t m : off) {
      const Instruction& ins = prog_.code[m];
      lane_off(ins);
      trace_.add(IssueRecord{0, cost(trad(ins.opcode.op, *ins.opcode.type)), IssueKind::Traditional,
                             1 + absorbed(ins), lane_bit(RegClass::Trad), 0, 1, 1});
    }
    st_.parallel = false;
    st_.conv = ConvMask{};
    control(prog_.code[g.close].opcode);
  }

  std::size_t target(const Operand& o) const { return labels_.at(std::get<LabelRef>(o).name); }

  /// Executes a lone instruction; returns the next pc.
  std::size_t single(std::size_t pc) {
    const Instruction& ins = prog_.code[pc];
    const Opcode& oc = ins.opcode;
    switch (oc.op) {
      case Op::BR:
        control(oc);
        return target(ins.operands[0]);
      case Op::BNZ:
        control(oc);
        return st_.read(std::get<Reg>(ins.operands[0])).is_zero() ? target(ins.operands[2]) : target(ins.operands[1]);
      case Op::FTEN: case Op::FTDS: st_.set_line(SdtKind::Float, oc.op == Op::FTEN); control(oc); return pc + 1;
      case Op::DBEN: case Op::DBDS: st_.set_line(SdtKind::Double, oc.op == Op::DBEN); control(oc); return pc + 1;
      case Op::CHEN: case Op::CHDS: st_.set_line(SdtKind::Char, oc.op == Op::CHEN); control(oc); return pc + 1;
      case Op::VEN: case Op::VDS: case Op::PEN: case Op::PDS:
        throw Error(ErrorCode::MalformedOperand, oc.mnemonic() + " outside a well-formed group");
      case Op::CONV: {
        if (ins.operands.size() == 1) {
          st_.conv = *ins.conv_mask();
          control(oc);
          return pc + 1;
        }
        const Reg& dst = std::get<Reg>(ins.operands[1]);
        const ValueType to = class_type(dst.cls);
        st_.write(dst, tcu_convert(st_.read(std::get<Reg>(ins.operands[2])), to, *ins.conv_mask()));
        if (st_.lane_enabled(to)) {
          trace_.add(IssueRecord{0, cost(oc), IssueKind::Scalar, 1, lane_bit(dst.cls), 0, 0, 0});
        } else {
          lane_off(ins);
          trace_.add(IssueRecord{0, cost(typeline::control(Op::CVT)), IssueKind::Traditional, 1,
                                 lane_bit(RegClass::Trad), 0, 0, 1});
        }
        return pc + 1;
      }
      case Op::OBJN: {
        const std::int64_t h = st_.heap.obj_new(st_.read(std::get<Reg>(ins.operands[1])).as_int());
        st_.write(std::get<Reg>(ins.operands[0]), Value::of_int(static_cast<std::int32_t>(h)));
        trace_.add(IssueRecord{0, cost(oc), IssueKind::Scalar, 1, lane_bit(RegClass::Int), 0, 0, 0});
        return pc + 1;
      }
      case Op::OBJR: {
        if (auto h = std::get_if<Handle>(&ins.operands[0])) st_.heap.obj_release(static_cast<std::int64_t>(h->id));
        else st_.heap.obj_release(st_.read(std::get<Reg>(ins.operands[0])).as_int());
        trace_.add(IssueRecord{0, cost(oc), IssueKind::Scalar, 1, lane_bit(RegClass::Int), 0, 0, 0});
        return pc + 1;
      }
      case Op::CVT: {
        const Reg& dst = std::get<Reg>(ins.operands[0]);
        st_.write(dst, convert(st_.read(std::get<Reg>(ins.operands[1])), class_type(dst.cls)));
        trace_.add(IssueRecord{0, cost(oc), IssueKind::Traditional, 1, lane_bit(RegClass::Trad), 0, 0, 1});
        return pc + 1;
      }
      case Op::LEA: {
        st_.write(std::get<Reg>(ins.operands[0]), Value::of_long(st_.address(std::get<Mem>(ins.operands[1]))));
        trace_.add(IssueRecord{0, cost(oc), IssueKind::Traditional, 1, lane_bit(RegClass::Trad), 0, 0, 1});
        return pc + 1;
      }
      default: break;
    }

    // typed data instruction
    const ValueType t = *oc.type;
    bool routed = oc.traditional;
    int c = cost(oc);
    if (!routed && !st_.lane_enabled(t)) {
      lane_off(ins);
      routed = true;
      c = cost(trad(oc.op, t));
    }
    int loads = 0, computes = 0;
    switch (oc.op) {
      case Op::LD:
        commit({load(ins)});
        loads = 1;
        break;
      case Op::ST: {
        const Mem& m = std::get<Mem>(ins.operands[1]);
        const Value& v = st_.read(std::get<Reg>(ins.operands[0]));
        st_.memory[st_.address(m)] = v;
        break;
      }
      case Op::MOV:
        if (auto imm = std::get_if<Imm>(&ins.operands[1])) st_.write(std::get<Reg>(ins.operands[0]), imm->value);
        else st_.write(std::get<Reg>(ins.operands[0]), st_.read(std::get<Reg>(ins.operands[1])));
        break;
      default:
        commit({alu(ins, ConvMask{})});
        computes = 1;
        break;
    }
    const LaneSet lane = routed ? lane_bit(RegClass::Trad) : lane_bit(reg_class(t));
    trace_.add(IssueRecord{0, c, routed ? IssueKind::Traditional : IssueKind::Scalar, 1, lane, loads, computes,
                           routed ? 1 : 0});
    return pc + 1;
  }

  const Program& prog_;
  const RunOptions& opts_;
  MachineState st_;
  TraceBuilder trace_;
  std::unordered_map<std::string, std::size_t> labels_;
  std::unordered_map<std::size_t, Group> groups_;
};

}  // namespace detail

inline std::string join_violations(const std::vector<Violation>& vs, std::size_t limit = 5) {
  std::string s;
  for (std::size_t i = 0; i < vs.size() && i < limit; ++i) s += (i ? "\n" : "") + vs[i].str();
  if (vs.size() > limit) s += "\n... " + std::to_string(vs.size() - limit) + " more";
  return s;
}

/// Validates, then executes `prog` with memory seeded from `inputs`.
inline ExecTrace run(const Program& prog, const nlohmann::json& inputs = nlohmann::json::object(),
                     const RunOptions& opts = {}) {
  if (auto vs = validate(prog, opts.validation); !vs.empty())
    throw Error(ErrorCode::ValidationFailure, join_violations(vs));
  opts.costs.check();
  detail::Runner r(prog, inputs, opts);
  return r.run();
}

}  // namespace typeline::machine
