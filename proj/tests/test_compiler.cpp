#include <catch_amalgamated.hpp>

#include "typeline/assembly.hpp"
#include "typeline/compiler/emit.hpp"
#include "typeline/frontend/lower.hpp"
#include "typeline/frontend/parser.hpp"
#include "typeline/frontend/typecheck.hpp"
#include "typeline/machine/baseline.hpp"
#include "typeline/machine/machine.hpp"

using namespace typeline;
using namespace typeline::compiler;
using nlohmann::json;

namespace {

ir::Program lowered(std::string_view src, int unroll = 1) {
  return minic::lower(minic::type_check(minic::parse_minic(src)), minic::LowerOptions{unroll});
}

const char* kFig5 = "int a; int b; int c; int d; float f; int s; float q; int t;"
                    "void main() { t = d; s = a + b; q = c / f; }";

/// A single block of `n` independent int loads from distinct globals.
ir::Program independent_loads(int n) {
  ir::Program p;
  ir::Block b;
  for (int i = 0; i < n; ++i) {
    p.symbols.push_back(Symbol{"g" + std::to_string(i), true, 0, {Value::of_int(i)}});
    ir::Op op;
    op.kind = ir::OpKind::Load;
    op.dst = p.new_vreg(ValueType::Int);
    op.mem.symbol = static_cast<std::uint32_t>(i);
    b.ops.push_back(op);
  }
  p.blocks.push_back(b);
  p.layout();
  return p;
}

std::vector<std::string> mnemonics(const Program& p) {
  std::vector<std::string> out;
  for (const auto& ins : p.code) out.push_back(ins.opcode.mnemonic());
  return out;
}

}  // namespace

TEST_CASE("hazards examples") {
  ir::Program p = lowered("int a; int b; int x; int y; void main() { x = a + 1; y = b; b = x; }");
  const ir::Block& b = p.blocks.front();
  auto deps = hazards(b);
  auto dep = [&](std::size_t i, std::size_t j) {
    return std::find_if(deps.begin(), deps.end(), [&](const Dependence& d) { return d.from == i && d.to == j; });
  };
  // ld a, imm 1, add, st x, ld b, st y, st b (the reload of x is forwarded)
  REQUIRE(b.ops.size() == 7);
  REQUIRE(dep(0, 2) != deps.end());
  CHECK(dep(0, 2)->kind == DepKind::Raw);
  CHECK(dep(0, 4) == deps.end());
  CHECK(dep(4, 6) != deps.end());
  CHECK(dep(4, 6)->memory);
  CHECK(dep(4, 6)->kind == DepKind::War);
  CHECK(dep(3, 6) == deps.end());

  ir::Program st = lowered("int a; int* p; int v; void main() { a = 1; v = a; v = *p; }");
  auto d2 = hazards(st.blocks.front());
  CHECK(std::any_of(d2.begin(), d2.end(), [](const Dependence& d) { return d.memory && d.kind == DepKind::Waw; }));
  CHECK(may_alias(ir::MemRef{ir::MemRef::Mode::Direct, 0, 0}, ir::MemRef{ir::MemRef::Mode::Indirect, 5, 0, 1}));
  CHECK_FALSE(may_alias(ir::MemRef{ir::MemRef::Mode::Direct, 0, 0}, ir::MemRef{ir::MemRef::Mode::Direct, 1, 0}));
  CHECK_FALSE(may_alias(ir::MemRef{ir::MemRef::Mode::Direct, 0, 0}, ir::MemRef{ir::MemRef::Mode::Direct, 0, 1}));
  CHECK(may_alias(ir::MemRef{ir::MemRef::Mode::Direct, 0, 0}, ir::MemRef{ir::MemRef::Mode::Indexed, 0, 0, 3}));
}

TEST_CASE("schedule_block examples") {
  Config cfg;
  BlockSchedule four = schedule_block(independent_loads(4).blocks[0], cfg);
  REQUIRE(four.issues.size() == 1);
  CHECK(four.issues[0].kind == ClusterKind::LoadCluster);
  CHECK(four.issues[0].members.size() == 4);
  CHECK(four.issues[0].cost == 3);

  BlockSchedule seventeen = schedule_block(independent_loads(17).blocks[0], cfg);
  REQUIRE(seventeen.issues.size() == 2);
  CHECK(seventeen.issues[0].members.size() == 16);
  CHECK(seventeen.issues[1].kind == ClusterKind::Scalar);

  BlockSchedule forty = schedule_block(independent_loads(40).blocks[0], cfg);
  std::vector<std::size_t> sizes;
  for (const auto& c : forty.issues) sizes.push_back(c.members.size());
  CHECK(sizes == std::vector<std::size_t>{16, 16, 8});

  ir::Program fig5 = lowered(kFig5);
  BlockSchedule s = schedule_block(fig5.blocks[0], cfg);
  std::vector<const Cluster*> groups;
  for (const auto& c : s.issues)
    if (c.grouped()) groups.push_back(&c);
  REQUIRE(groups.size() == 2);
  CHECK(groups[0]->kind == ClusterKind::LoadCluster);
  CHECK(groups[0]->members.size() == 4);
  CHECK(groups[1]->kind == ClusterKind::OpCluster);
  CHECK(groups[1]->members.size() == 2);
  CHECK(groups[1]->absorbed.size() == 1);
  CHECK(groups[1]->mask.str() == "00000001");
  CHECK(conversions_for(*groups[1], fig5.blocks[0]) == groups[1]->mask);
  CHECK(groups[0]->cost + groups[1]->cost == 16);
  CHECK(schedule_cost(s, cfg) == 32);
  CHECK(schedule_cost(scalar_schedule(fig5.blocks[0], cfg), cfg) == 38);

  Config off = cfg;
  off.cluster = false;
  CHECK(schedule_block(fig5.blocks[0], off) == scalar_schedule(fig5.blocks[0], off));
}

TEST_CASE("cluster rules hold in schedules") {
  ir::Program p = lowered(R"(
    int a; int b; int c; int d; int e; int x; int y; int z; int w;
    float f; float g; double h; char k; char m;
    void main() {
      x = a + b; y = c - d; z = a * e; w = b + e;
      f = f * g; h = h + h; k = k + m;
    }
  )");
  BlockSchedule s = schedule_block(p.blocks[0], Config{});
  int op_clusters = 0;
  for (const auto& c : s.issues) {
    if (c.kind == ClusterKind::OpCluster) {
      ++op_clusters;
      CHECK(c.members.size() >= 2);
      CHECK(c.members.size() <= 4);
      std::set<ValueType> types;
      for (std::size_t m : c.members) types.insert(p.blocks[0].ops[m].type);
      CHECK((types.size() == 1 || types.size() == c.members.size()));
    }
    if (c.kind == ClusterKind::LoadCluster) {
      CHECK(c.members.size() <= 16);
      std::set<ValueType> types;
      for (std::size_t m : c.members) types.insert(p.blocks[0].ops[m].type);
      CHECK(types.size() == 1);
    }
  }
  CHECK(op_clusters >= 1);
}

TEST_CASE("conversions route by direction") {
  ir::Program p = lowered("double d; int i; float f; void main() { i = (int)d; f = i; }");
  const auto& ops = p.blocks[0].ops;
  int cvt = 0, conv = 0;
  for (const auto& op : ops) {
    if (op.kind != ir::OpKind::Convert) continue;
    Opcode oc = select(op);
    (oc.op == Op::CVT ? cvt : conv)++;
    if (op.from == ValueType::Double) CHECK(oc.traditional);
  }
  CHECK(cvt == 1);
  CHECK(conv == 1);
  Cluster empty;
  CHECK(conversions_for(empty, p.blocks[0]).str() == "00000000");
}

TEST_CASE("emit fig5") {
  Compiled c = compile_detailed(lowered(kFig5));
  const Program& prog = c.program;
  CHECK(validate(prog).empty());
  auto m = mnemonics(prog);
  auto find = [&](const std::string& s, std::size_t from = 0) {
    return static_cast<std::size_t>(std::find(m.begin() + static_cast<long>(from), m.end(), s) - m.begin());
  };
  const std::size_t ven = find("VEN");
  REQUIRE(ven < m.size());
  CHECK(std::get<VecLen>(prog.code[ven].operands[0]).count == 4);
  CHECK(std::vector<std::string>(m.begin() + static_cast<long>(ven), m.begin() + static_cast<long>(ven) + 6) ==
        std::vector<std::string>{"VEN", "LD.in", "LD.in", "LD.in", "LD.in", "VDS"});
  const std::size_t pen = find("PEN");
  REQUIRE(pen + 4 < m.size());
  CHECK(prog.code[pen + 1].str() == "CONV 00000001");
  CHECK(std::vector<std::string>(m.begin() + static_cast<long>(pen) + 2, m.begin() + static_cast<long>(pen) + 5) ==
        std::vector<std::string>{"ADD.in", "DIV.ft", "PDS"});
  CHECK(prog.code[pen].cluster == prog.code[pen + 4].cluster);

  json in = {{"a", 2}, {"b", 3}, {"c", 7}, {"d", 9}, {"f", 2.0}};
  auto t = machine::run(prog, in);
  auto base = machine::run_baseline(lowered(kFig5), in);
  CHECK(machine::same_outputs(t.outputs, base.outputs));
  CHECK(t.cycles() == 32);
  CHECK(base.cycles() == 38);
  CHECK(t.totals.ops == base.totals.ops);

  std::string text = format_assembly(prog);
  CHECK(parse_assembly(text) == prog);
  CHECK(format_assembly(compile(lowered(kFig5))) == text);
}

TEST_CASE("compile examples") {
  CHECK(compile(ir::Program{}).code.empty());

  Program single = compile(lowered("int x; int y; void main() { x = x + y; }"));
  for (const auto& ins : single.code) CHECK(ins.opcode.op != Op::PEN);

  Compiled ptr = compile_detailed(lowered("int x; int* p; void main() { p = &x; *p = 4; }"));
  for (const auto& s : ptr.schedules)
    for (const auto& c : s.issues) CHECK_FALSE(c.grouped());
  auto t = machine::run(ptr.program);
  CHECK(t.outputs.front() == std::pair<std::string, Value>{"x", Value::of_int(4)});
  CHECK(t.totals.routed_ops > 0);
}

TEST_CASE("control flow compiles to branches") {
  const char* src = R"(
    int n; int acc; float fs;
    void main() {
      int i = 0;
      while (i < n) { acc = acc + i; fs = fs + 1; i = i + 1; }
      if (acc > 10) acc = 1; else acc = 2;
    }
  )";
  ir::Program p = lowered(src);
  Program prog = compile(p);
  CHECK(validate(prog).empty());
  for (int n : {0, 3, 6}) {
    json in = {{"n", n}};
    auto t = machine::run(prog, in);
    auto b = machine::run_baseline(p, in);
    CHECK(machine::same_outputs(t.outputs, b.outputs));
    CHECK(t.cycles() <= b.cycles());
    CHECK(t.totals.control_issues >= b.totals.control_issues);
  }
}

TEST_CASE("register pressure spills") {
  ir::Program p;
  p.symbols.push_back(Symbol{"sum", true, 0, {Value::of_int(0)}});
  ir::Block b;
  std::vector<ir::VReg> vals;
  for (int i = 0; i < 40; ++i) {
    ir::Op op;
    op.kind = ir::OpKind::LoadImm;
    op.dst = p.new_vreg(ValueType::Int);
    op.imm = Value::of_int(i + 1);
    b.ops.push_back(op);
    vals.push_back(op.dst);
  }
  ir::VReg acc = vals.back();
  for (int i = 38; i >= 0; --i) {
    ir::Op op;
    op.kind = ir::OpKind::Binop;
    op.dst = p.new_vreg(ValueType::Int);
    op.src = {acc, vals[static_cast<std::size_t>(i)]};
    b.ops.push_back(op);
    acc = op.dst;
  }
  ir::Op st;
  st.kind = ir::OpKind::Store;
  st.src = {acc};
  b.ops.push_back(st);
  p.blocks.push_back(b);
  p.layout();
  REQUIRE_FALSE(ir::check(p));

  Compiled c = compile_detailed(p);
  CHECK(c.spill_stores > 0);
  CHECK(c.spill_loads > 0);
  CHECK(validate(c.program).empty());
  auto t = machine::run(c.program);
  CHECK(t.outputs.front().second == Value::of_int(40 * 41 / 2));
}

TEST_CASE("config parsing") {
  Config c = Config::from_json(json::parse(R"({"window": 4, "caps": {"load": 8}, "lanes": {"char": false}, "unroll": 2})"));
  CHECK(c.window == 4);
  CHECK(c.load_cap == 8);
  CHECK(c.op_cap == 4);
  CHECK_FALSE(c.lanes.char_line);
  CHECK(c.unroll == 2);
  auto code = [](const char* text) {
    try {
      Config::from_json(json::parse(text));
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::StepLimit;
  };
  CHECK(code(R"({"window": 0})") == ErrorCode::InvalidConfig);
  CHECK(code(R"({"caps": {"op": 5}})") == ErrorCode::InvalidConfig);
  CHECK(code(R"({"lanes": {"int": false}})") == ErrorCode::ProtectedLane);
  CHECK(code(R"({"colour": 1})") == ErrorCode::InvalidConfig);
  CHECK(Config::from_json(json::parse(R"({"caps": {"op": 5}, "relax": true})")).op_cap == 5);
}

TEST_CASE("disabled lanes compile to the traditional lane") {
  ir::Program p = lowered("float a; float b; float c; void main() { c = a * b + a; }");
  Config cfg;
  cfg.lanes.float_line = false;
  Program prog = compile(p, cfg);
  for (const auto& ins : prog.code)
    if (ins.opcode.type == ValueType::Float) CHECK(ins.opcode.traditional);
  machine::BaselineOptions bo;
  bo.lanes = cfg.lanes;
  json in = {{"a", 1.5}, {"b", 2.0}};
  auto t = machine::run(prog, in);
  auto b = machine::run_baseline(p, in, bo);
  CHECK(machine::same_outputs(t.outputs, b.outputs));
  CHECK(t.cycles() == b.cycles());
}
