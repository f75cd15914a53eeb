#pragma once

// Sequential reference executor over the IR: every op issues alone at the
// cost of the instruction selection maps it to.

#include "typeline/compiler/isel.hpp"
#include "typeline/machine/machine.hpp"

namespace typeline::machine {

struct BaselineOptions {
  CostTable costs = CostTable::defaults();
  compiler::LaneConfig lanes;
  bool keep_records = true;
  std::uint64_t max_issues = 50'000'000;
};

inline ExecTrace run_baseline(const ir::Program& p, const nlohmann::json& inputs = nlohmann::json::object(),
                              const BaselineOptions& opts = {}) {
  std::vector<Value> mem = build_memory(p.symbols, p.memory_words, inputs);
  std::vector<Value> vals(p.vreg_types.size());
  ObjectHeap heap;
  TraceBuilder trace(opts.keep_records);

  auto address = [&](const ir::MemRef& m) -> std::uint32_t {
    switch (m.mode) {
      case ir::MemRef::Mode::Direct: return checked_address(p.symbols[m.symbol].address + m.offset, mem.size());
      case ir::MemRef::Mode::Indexed: {
        const Symbol& s = p.symbols[m.symbol];
        return checked_index(s.address, vals[m.reg].as_int(), s.size(), mem.size());
      }
      case ir::MemRef::Mode::Indirect: return checked_address(vals[m.reg].as_long(), mem.size());
    }
    return 0;
  };

  std::uint64_t issued = 0;
  std::size_t b = 0;
  while (b < p.blocks.size()) {
    const ir::Block& block = p.blocks[b];
    for (const ir::Op& op : block.ops) {
      if (++issued > opts.max_issues) throw Error(ErrorCode::StepLimit, "issue limit reached");
      switch (op.kind) {
        case ir::OpKind::LoadImm: vals[op.dst] = op.imm; break;
        case ir::OpKind::Load: vals[op.dst] = load_word(mem[address(op.mem)], op.type); break;
        case ir::OpKind::Store: mem[address(op.mem)] = vals[op.src[0]]; break;
        case ir::OpKind::Binop: vals[op.dst] = apply(op.alu, vals[op.src[0]], vals[op.src[1]]); break;
        case ir::OpKind::Compare: vals[op.dst] = compare(op.cond, vals[op.src[0]], vals[op.src[1]]); break;
        case ir::OpKind::Convert: vals[op.dst] = convert(vals[op.src[0]], op.type); break;
        case ir::OpKind::ObjNew:
          vals[op.dst] = Value::of_int(static_cast<std::int32_t>(heap.obj_new(vals[op.src[0]].as_int())));
          break;
        case ir::OpKind::ObjRelease: heap.obj_release(vals[op.src[0]].as_int()); break;
        case ir::OpKind::AddrOf: vals[op.dst] = Value::of_long(address(op.mem)); break;
      }
      const Opcode oc = compiler::select(op, opts.lanes);
      const bool routed = oc.traditional;
      LaneSet lane = lane_bit(RegClass::Trad);
      if (!routed) lane = oc.type ? lane_bit(reg_class(*oc.type)) : lane_bit(reg_class(op.type));
      const bool computes = op.kind == ir::OpKind::Binop || op.kind == ir::OpKind::Compare;
      trace.add(IssueRecord{0, opts.costs.cost(oc), routed ? IssueKind::Traditional : IssueKind::Scalar, 1, lane,
                            op.kind == ir::OpKind::Load ? 1 : 0, computes ? 1 : 0, routed ? 1 : 0});
    }
    for (const Opcode& oc : compiler::terminator_opcodes(p, b))
      trace.add(IssueRecord{0, opts.costs.cost(oc), IssueKind::Control, 0, 0, 0, 0, 0});
    const ir::Terminator& t = block.term;
    switch (t.kind) {
      case ir::TermKind::Exit: b = p.blocks.size(); break;
      case ir::TermKind::Jump: b = t.target; break;
      case ir::TermKind::Branch: b = vals[t.cond].is_zero() ? t.alt : t.target; break;
    }
    if (++issued > opts.max_issues) throw Error(ErrorCode::StepLimit, "issue limit reached");
  }

  ExecTrace out;
  trace.finish(out);
  out.outputs = collect_outputs(p.symbols, mem);
  out.heap = heap;
  out.memory = std::move(mem);
  return out;
}

}  // namespace typeline::machine
