#include <catch_amalgamated.hpp>

#include <algorithm>
#include <map>
#include <random>

#include "typeline/assembly.hpp"
#include "typeline/frontend/lower.hpp"
#include "typeline/frontend/parser.hpp"
#include "typeline/frontend/typecheck.hpp"
#include "typeline/machine/baseline.hpp"
#include "typeline/machine/machine.hpp"

using namespace typeline;
using namespace typeline::machine;
using nlohmann::json;

namespace {

const char* kSymbols = R"(.mem 9
.global a 1 = in:0
.global b 2 = in:0
.global c 3 = in:0
.global d 4 = in:0
.global f 5 = ft:0
.global s 6 = in:0
.global q 7 = ft:0
.global t 8 = in:0
)";

const char* kFig5Code = R"(VEN 4
LD.in r1, [4]
LD.in r2, [1]
LD.in r3, [2]
LD.in r4, [3]
VDS
LD.ft f1, [5]
ST.in r1, [8]
PEN
CONV 00000001
ADD.in r5, r2, r3
DIV.ft f2, r4, f1
PDS
ST.in r5, [6]
ST.ft f2, [7]
)";

const json kFig5Inputs = {{"a", 2}, {"b", 3}, {"c", 7}, {"d", 9}, {"f", 2.0}};

Value out(const ExecTrace& t, const std::string& name) {
  for (const auto& [n, v] : t.outputs)
    if (n == name) return v;
  FAIL("no output " << name);
  return {};
}

ErrorCode run_code(const std::string& text, const json& inputs = json::object(), RunOptions opts = {}) {
  try {
    run(parse_assembly(text), inputs, opts);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected a trap");
  return ErrorCode::StepLimit;
}

ir::Program lowered(std::string_view src) { return minic::lower(minic::type_check(minic::parse_minic(src))); }

}  // namespace

TEST_CASE("tcu conversions") {
  const ConvMask all{0b111};
  CHECK(tcu_convert(Value::of_int(7), ValueType::Float, all) == Value::of_float(7.0f));
  CHECK(tcu_convert(Value::of_float(0.5f), ValueType::Double, all) == Value::of_double(0.5));
  // 2^31 - 1 lies between the floats 2^31 - 128 and 2^31; nearest is 2^31
  const Value big = tcu_convert(Value::of_int(2147483647), ValueType::Float, all);
  CHECK(big.as_float() == 2147483648.0f);
  CHECK(static_cast<long double>(big.as_float()) - 2147483647.0L < 2147483647.0L - 2147483520.0L);

  try {
    tcu_convert(Value::of_int(1), ValueType::Float, ConvMask{0b010});
    FAIL("mask did not gate");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConversionDisabled);
  }
  try {
    tcu_convert(Value::of_double(1.0), ValueType::Int, all);
    FAIL("narrowing accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedConversion);
  }
}

TEST_CASE("set_line") {
  MachineState st({});
  try {
    st.set_line(SdtKind::Int, false);
    FAIL("int line disabled");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ProtectedLane);
  }
  st.set_line(SdtKind::Float, false);
  CHECK_FALSE(st.lane_enabled(ValueType::Float));
  st.set_line(SdtKind::Float, true);
  CHECK(st.lane_enabled(ValueType::Float));
  CHECK(st.lane_enabled(ValueType::Int));
}

TEST_CASE("fig5 program") {
  ExecTrace t = run(parse_assembly(std::string(kSymbols) + kFig5Code), kFig5Inputs);
  CHECK(out(t, "t") == Value::of_int(9));
  CHECK(out(t, "s") == Value::of_int(5));
  CHECK(out(t, "q") == Value::of_float(3.5f));

  std::vector<IssueRecord> clusters;
  for (const auto& r : t.issues)
    if (r.kind == IssueKind::LoadCluster || r.kind == IssueKind::OpCluster) clusters.push_back(r);
  REQUIRE(clusters.size() == 2);
  CHECK(clusters[0].cost == 3);
  CHECK(clusters[0].members == 4);
  CHECK(clusters[1].cost == 13);
  CHECK(clusters[1].members == 3);  // ADD, DIV and the folded int->float conversion
  CHECK(clusters[1].lanes == (lane_bit(RegClass::Int) | lane_bit(RegClass::Float)));
  CHECK(clusters[0].cost + clusters[1].cost == 16);

  CHECK(t.cycles() == 1 + 3 + 1 + 3 + 3 + 1 + 13 + 1 + 3 + 3);
  CHECK(t.totals.ops == 11);
  CHECK(t.totals.control_issues == 4);
  CHECK(t.totals.load_ops == 5);
  CHECK(t.totals.load_slots == 2);
  CHECK(t.totals.compute_ops == 2);
  CHECK(t.totals.compute_slots == 1);
  CHECK(t.totals.routed_ops == 0);
}

TEST_CASE("trace records are contiguous") {
  ExecTrace t = run(parse_assembly(std::string(kSymbols) + kFig5Code), kFig5Inputs);
  std::uint64_t c = 0, sum = 0;
  for (const auto& r : t.issues) {
    CHECK(r.cycle_start == c);
    c += static_cast<std::uint64_t>(r.cost);
    sum += static_cast<std::uint64_t>(r.cost);
  }
  CHECK(sum == t.cycles());
  const std::string jsonl = trace_jsonl(t);
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == static_cast<long>(t.issues.size()));
  CHECK(json::parse(jsonl.substr(0, jsonl.find('\n')))["kind"] == "control");
}

TEST_CASE("run examples") {
  ExecTrace empty = run(Program{});
  CHECK(empty.cycles() == 0);
  CHECK(empty.issues.empty());

  ExecTrace sum = run(parse_assembly(".mem 2\n.global x 1 = in:0\nMOV.in r1, #2\nMOV.in r2, #3\n"
                                     "ADD.in r3, r1, r2\nST.in r3, [1]\n"));
  CHECK(out(sum, "x") == Value::of_int(5));
  CHECK(sum.cycles() == 1 + 1 + 1 + 3);

  CHECK(run_code(".mem 2\n.global x 1 = in:0\nMOV.in r1, #1\n", {{"y", 1}}) == ErrorCode::UnboundInput);
}

TEST_CASE("control flow") {
  ExecTrace t = run(parse_assembly(R"(.mem 2
.global n 1 = in:0
MOV.in r1, #0
MOV.in r2, #1
MOV.in r3, #5
loop: CMPS.in r4, r1, r3
T.BNZ r4, body, done
body: ADD.in r1, r1, r2
T.BR loop
done: ST.in r1, [1]
)"));
  CHECK(out(t, "n") == Value::of_int(5));
  CHECK(t.totals.control_issues == 6 + 5);
}

TEST_CASE("exec issue wrappers") {
  ExecTrace t = run(parse_assembly(".mem 5\n.global a 1 = in:1 in:2 in:3 in:4\n"
                                   "VEN 4\nLD.in r1, [1]\nLD.in r2, [2]\nLD.in r3, [3]\nLD.in r4, [4]\nVDS\n"));
  REQUIRE(t.issues.size() == 3);
  CHECK(t.issues[0].kind == IssueKind::Control);
  CHECK(t.issues[1].cost == 3);
  CHECK(t.issues[2].kind == IssueKind::Control);
  CHECK(t.issues[2].cost == 1);
  CHECK(t.registers[0][4] == Value::of_int(4));
}

TEST_CASE("runtime lane disable reroutes") {
  const std::string text = ".mem 2\n.global x 1 = ft:0\nMOV.ft f1, #1.5\nFTDS\nADD.ft f2, f1, f1\nFTEN\n"
                           "ADD.ft f3, f2, f1\nST.ft f3, [1]\n";
  ExecTrace t = run(parse_assembly(text));
  CHECK(out(t, "x") == Value::of_float(4.5f));
  CHECK(t.totals.routed_ops == 1);
  CHECK(t.totals.rerouted_at_runtime == 1);
  const IssueRecord& r = t.issues[2];
  CHECK(r.kind == IssueKind::Traditional);
  CHECK(r.cost == 6);
  CHECK(t.issues[4].kind == IssueKind::Scalar);

  RunOptions strict;
  strict.strict_lanes = true;
  CHECK(run_code(text, json::object(), strict) == ErrorCode::LaneDisabledAtRuntime);

  ExecTrace g = run(parse_assembly(".mem 3\n.global a 1 = ft:1 ft:2\nFTDS\nVEN 2\nLD.ft f1, [1]\nLD.ft f2, [2]\nVDS\n"));
  CHECK(g.totals.routed_ops == 2);
  CHECK(g.totals.cluster_sizes.empty());
  CHECK(g.registers[1][2] == Value::of_float(2.0f));
}

TEST_CASE("machine traps") {
  CHECK(run_code("MOV.in r1, #1\nMOV.in r2, #0\nDIV.in r3, r1, r2\n") == ErrorCode::IntDivisionByZero);
  CHECK(run_code(".mem 2\n.global a 1 = in:0\nMOV.in r1, #1\nLD.in r2, [1+r1:1]\n") == ErrorCode::MemoryFault);
  CHECK(run_code(".mem 2\n.global a 1 = in:0\nMOV.ft f1, #1.0\nMOV.in r1, #2\n"
                 "PEN\nADD.ft f2, r1, f1\nADD.ft f3, f1, f1\nPDS\n") == ErrorCode::ValidationFailure);
  CHECK(run_code("l: T.BR l\n") == ErrorCode::StepLimit);
  CHECK(run_code("MOV.in r1, #0\nOBJ.n r2, r1\n") == ErrorCode::ZeroSizeAllocation);
  CHECK(run_code("MOV.in r1, #8\nOBJ.n r2, r1\nOBJ.r r2\nOBJ.r r2\n") == ErrorCode::DoubleFree);
  CHECK(run_code("OBJ.r h5\n") == ErrorCode::UnknownHandle);
  CHECK(run_code("MOV.in r1, #1\nT.LEA x1, [0]\nT.LD.in r2, [x1]\n") == ErrorCode::ValidationFailure);
}

TEST_CASE("heap through the machine") {
  ExecTrace t = run(parse_assembly("MOV.in r1, #16\nMOV.in r2, #8\nOBJ.n r3, r1\nOBJ.n r4, r2\nOBJ.r r3\n"));
  CHECK(t.heap.live_bytes() == 8);
  CHECK(t.heap.peak_bytes() == 24);
  CHECK(t.heap.alloc_count() == 2);
  CHECK(t.heap.release_count() == 1);
  CHECK(t.cycles() == 1 + 1 + 10 + 10 + 5);
}

TEST_CASE("heap matches an independent replay") {
  std::mt19937 rng(7);
  ObjectHeap heap;
  std::map<std::int64_t, std::int64_t> live;
  std::vector<std::int64_t> released;
  std::int64_t bytes = 0, peak = 0;
  for (int i = 0; i < 1000; ++i) {
    const int action = static_cast<int>(rng() % 3);
    if (action == 0 || live.empty()) {
      const std::int64_t size = 1 + static_cast<std::int64_t>(rng() % 64);
      const std::int64_t h = heap.obj_new(size);
      CHECK(live.count(h) == 0);
      CHECK(std::find(released.begin(), released.end(), h) == released.end());
      live[h] = size;
      bytes += size;
      peak = std::max(peak, bytes);
    } else if (action == 1) {
      auto it = std::next(live.begin(), static_cast<long>(rng() % live.size()));
      heap.obj_release(it->first);
      bytes -= it->second;
      released.push_back(it->first);
      live.erase(it);
    } else if (!released.empty()) {
      const std::int64_t h = released[rng() % released.size()];
      try {
        heap.obj_release(h);
        FAIL("double free missed");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::DoubleFree);
      }
    }
    REQUIRE(heap.live_bytes() == bytes);
    REQUIRE(heap.live_bytes() >= 0);
    REQUIRE(heap.peak_bytes() == peak);
  }
}

TEST_CASE("cluster member order is immaterial") {
  std::vector<std::string> loads = {"LD.in r1, [4]", "LD.in r2, [1]", "LD.in r3, [2]", "LD.in r4, [3]"};
  std::vector<std::string> ops = {"ADD.in r5, r2, r3", "DIV.ft f2, r4, f1"};
  std::optional<ExecTrace> first;
  std::sort(loads.begin(), loads.end());
  do {
    for (int flip = 0; flip < 2; ++flip) {
      std::string text = std::string(kSymbols) + "VEN 4\n";
      for (const auto& l : loads) text += l + "\n";
      text += "VDS\nLD.ft f1, [5]\nST.in r1, [8]\nPEN\nCONV 00000001\n";
      text += ops[flip] + "\n" + ops[1 - flip] + "\nPDS\nST.in r5, [6]\nST.ft f2, [7]\n";
      ExecTrace t = run(parse_assembly(text), kFig5Inputs);
      if (!first) {
        first = t;
        continue;
      }
      CHECK(t.memory == first->memory);
      CHECK(t.registers == first->registers);
      CHECK(t.cycles() == first->cycles());
    }
  } while (std::next_permutation(loads.begin(), loads.end()));
}

TEST_CASE("baseline examples") {
  ir::Program p = lowered("int a; int b; int c; int d; float f; int s; float q; int t;"
                          "void main() { t = d; s = a + b; q = c / f; }");
  ExecTrace t = run_baseline(p, kFig5Inputs);
  CHECK(out(t, "t") == Value::of_int(9));
  CHECK(out(t, "s") == Value::of_int(5));
  CHECK(out(t, "q") == Value::of_float(3.5f));
  CHECK(t.totals.ops == p.op_count());

  std::uint64_t region = 0;
  for (std::size_t i = 0; i < p.blocks[0].ops.size(); ++i) {
    const ir::Op& op = p.blocks[0].ops[i];
    const bool data = (op.kind == ir::OpKind::Load && op.type == ValueType::Int) || op.kind == ir::OpKind::Convert ||
                      op.kind == ir::OpKind::Binop;
    if (data) region += static_cast<std::uint64_t>(t.issues[i].cost);
  }
  CHECK(region == 4 * 3 + 1 + 1 + 12);
  CHECK(t.cycles() == 38);

  ir::Program heap;
  const ir::VReg size = heap.new_vreg(ValueType::Int), h_reg = heap.new_vreg(ValueType::Int);
  ir::Block b;
  auto make = [](ir::OpKind k, ir::VReg dst, std::vector<ir::VReg> src, Value imm = {}) {
    ir::Op op;
    op.kind = k;
    op.dst = dst;
    op.src = std::move(src);
    op.imm = imm;
    return op;
  };
  b.ops.push_back(make(ir::OpKind::LoadImm, size, {}, Value::of_int(16)));
  b.ops.push_back(make(ir::OpKind::ObjNew, h_reg, {size}));
  b.ops.push_back(make(ir::OpKind::ObjRelease, ir::kNoReg, {h_reg}));
  heap.blocks.push_back(b);
  heap.layout();
  REQUIRE_FALSE(ir::check(heap));
  ExecTrace h = run_baseline(heap);
  REQUIRE(h.issues.size() == 3);
  CHECK(h.issues[1].cost + h.issues[2].cost == 15);
  CHECK(h.heap.alloc_count() == 1);
  CHECK(h.heap.peak_bytes() == 16);
}
