// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "generators.hpp"
#include "typeline/assembly.hpp"
#include "typeline/cli.hpp"
#include "typeline/frontend/interp.hpp"
#include "typeline/metrics/pipeline.hpp"

using namespace typeline;
using namespace typeline::testgen;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = TYPELINE_FIXTURES;

struct Verdict {
  bool pass = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// 1 --------------------------------------------------------------------------
Verdict sdt_reproduction() {
  Clock clock;
  const std::string csv = (kFixtures / "figure3a_types.csv").string();
  const char* argv[] = {"typeline", "select-sdt", csv.c_str(), "-k", "4"};
  std::ostringstream out, err;
  const int rc = cli::run_cli(5, argv, out, err);
  std::set<std::string> got;
  std::istringstream lines(out.str());
  for (std::string t; std::getline(lines, t);) got.insert(t);
  const double s = clock.seconds();
  const bool ok = rc == 0 && got == std::set<std::string>{"int", "float", "double", "char"} && s < 1.0;
  std::string list;
  for (const auto& t : got) list += (list.empty() ? "" : ",") + t;
  return {ok, "selected {" + list + "} in " + fmt("%.3f s", s)};
}

// 2 --------------------------------------------------------------------------
Verdict fig5_regression() {
  const std::string src = cli::read_file((kFixtures / "fig5.mc").string());
  const auto inputs = nlohmann::json::parse(cli::read_file((kFixtures / "fig5.inputs.json").string()));
  const CostTable costs = CostTable::defaults();
  auto c = metrics::compare(src, inputs, {}, "fig5");
  const Program& prog = c.compiled.program;

  // Walk the emitted groups.
  int load_clusters = 0, op_clusters = 0;
  bool load_ok = false, op_ok = false;
  for (std::size_t i = 0; i < prog.code.size(); ++i) {
    const Op o = prog.code[i].opcode.op;
    if (o != Op::VEN && o != Op::PEN) continue;
    std::vector<const Instruction*> members;
    std::optional<std::string> mask;
    std::size_t j = i + 1;
    for (; j < prog.code.size() && prog.code[j].opcode.op != Op::VDS && prog.code[j].opcode.op != Op::PDS; ++j) {
      if (prog.code[j].opcode.op == Op::CONV) mask = prog.code[j].str();
      else members.push_back(&prog.code[j]);
    }
    if (o == Op::VEN) {
      ++load_clusters;
      load_ok = members.size() == 4 && std::all_of(members.begin(), members.end(), [](const Instruction* m) {
                  return m->opcode.op == Op::LD && m->opcode.type == ValueType::Int;
                });
    } else {
      ++op_clusters;
      std::multiset<std::string> names;
      for (const auto* m : members) names.insert(m->opcode.mnemonic());
      op_ok = names == std::multiset<std::string>{"ADD.in", "DIV.ft"} && mask && *mask == "CONV 00000001";
    }
    i = j;
  }

  // Executed issue costs of the two clusters, and the baseline cost of the same data ops.
  std::uint64_t region = 0;
  int op_cluster_cost = -1;
  for (const auto& r : c.typeline.issues) {
    if (r.kind == machine::IssueKind::LoadCluster || r.kind == machine::IssueKind::OpCluster)
      region += static_cast<std::uint64_t>(r.cost);
    if (r.kind == machine::IssueKind::OpCluster) op_cluster_cost = r.cost;
  }
  std::uint64_t base_region = 0;
  const ir::Block& block = c.ir.blocks.at(0);
  for (std::size_t i = 0; i < block.ops.size() && i < c.baseline.issues.size(); ++i) {
    const ir::Op& op = block.ops[i];
    const bool data = (op.kind == ir::OpKind::Load && op.type == ValueType::Int) || op.kind == ir::OpKind::Convert ||
                      op.kind == ir::OpKind::Binop;
    if (data) base_region += static_cast<std::uint64_t>(c.baseline.issues[i].cost);
  }
  const int div_ft = costs.cost(Opcode{Op::DIV, ValueType::Float});
  const bool ok = load_clusters == 1 && op_clusters == 1 && load_ok && op_ok && op_cluster_cost == 1 + div_ft &&
                  region == 16 && base_region == 26;
  return {ok, "load clusters " + std::to_string(load_clusters) + ", op clusters " + std::to_string(op_clusters) +
                  ", op-cluster cost " + std::to_string(op_cluster_cost) + " (1+DIV.ft = " + std::to_string(1 + div_ft) +
                  "), region " + std::to_string(region) + " vs baseline " + std::to_string(base_region)};
}

// 3, 4 -----------------------------------------------------------------------
struct FuzzStats {
  int programs = 0, trapped = 0, mismatched = 0, slower = 0, spilled = 0;
  double seconds = 0;
  std::vector<std::string> sources;
  std::vector<Program> compiled;
};

FuzzStats source_fuzz() {
  Clock clock;
  FuzzStats s;
  SourceGen gen(1234);
  std::mt19937_64 rng(77);
  while (s.programs < 1000) {
    const std::string src = gen.make();
    ir::Program p = metrics::lower_source(src);
    std::size_t ops = 0;
    for (const auto& b : p.blocks) ops += b.ops.size();
    if (ops > 200) continue;
    const nlohmann::json in = random_inputs(rng);
    compiler::Compiled c = compiler::compile_detailed(p);
    Outcome base = attempt([&] { return machine::run_baseline(p, in); });
    Outcome mach = attempt([&] { return machine::run(c.program, in); });
    if (base.trap || mach.trap) {
      ++s.trapped;
      if (base.trap != mach.trap) ++s.mismatched;
      continue;
    }
    ++s.programs;
    if (!machine::same_outputs(mach.trace->outputs, base.trace->outputs)) ++s.mismatched;
    if (mach.trace->cycles() > base.trace->cycles()) ++s.slower;
    if (c.spill_loads + c.spill_stores > 0) ++s.spilled;
    s.sources.push_back(src);
    s.compiled.push_back(std::move(c.program));
  }
  s.seconds = clock.seconds();
  return s;
}

// 5 --------------------------------------------------------------------------
struct IrFuzz {
  int blocks = 0, violations = 0, over_cap = 0;
  double seconds = 0;
  std::vector<Program> compiled;
};

IrFuzz ir_fuzz() {
  Clock clock;
  IrFuzz f;
  IrGen gen(424242);
  for (int i = 0; i < 10000; ++i) {
    ir::Program p = gen.make();
    compiler::Compiled c = compiler::compile_detailed(p);
    ++f.blocks;
    if (!validate(c.program).empty()) ++f.violations;
    for (const auto& s : c.schedules)
      for (const auto& cl : s.issues)
        if (cl.members.size() > (cl.kind == compiler::ClusterKind::LoadCluster ? 16u : 4u)) ++f.over_cap;
    f.compiled.push_back(std::move(c.program));
  }
  f.seconds = clock.seconds();
  return f;
}

// 6 --------------------------------------------------------------------------
Verdict heap_oracle() {
  std::mt19937_64 rng(99);
  ObjectHeap heap;
  std::map<std::int64_t, std::int64_t> live;
  std::set<std::int64_t> released;
  std::int64_t bytes = 0, peak = 0;
  int mismatches = 0, double_frees = 0, unknown = 0, missed = 0;
  for (int i = 0; i < 10000; ++i) {
    const int action = static_cast<int>(rng() % 10);
    auto expect_trap = [&](std::int64_t h, ErrorCode want, int& count) {
      try {
        heap.obj_release(h);
        ++missed;
      } catch (const Error& e) {
        if (e.code() == want) ++count;
        else ++missed;
      }
    };
    if (action < 5 || live.empty()) {
      const std::int64_t size = 1 + static_cast<std::int64_t>(rng() % 256);
      const std::int64_t h = heap.obj_new(size);
      if (live.count(h) || released.count(h)) ++mismatches;
      live[h] = size;
      bytes += size;
      peak = std::max(peak, bytes);
    } else if (action < 8) {
      auto it = std::next(live.begin(), static_cast<long>(rng() % live.size()));
      heap.obj_release(it->first);
      bytes -= it->second;
      released.insert(it->first);
      live.erase(it);
    } else if (action == 8 && !released.empty()) {
      expect_trap(*std::next(released.begin(), static_cast<long>(rng() % released.size())), ErrorCode::DoubleFree,
                  double_frees);
    } else {
      std::int64_t h = static_cast<std::int64_t>(rng() % 4096) - 16;
      if (rng() % 2) h += ObjectHeap::kFirstHandle + 100000;
      if (!live.count(h) && !released.count(h)) expect_trap(h, ErrorCode::UnknownHandle, unknown);
    }
    if (heap.live_bytes() != bytes || heap.peak_bytes() != peak) ++mismatches;
  }
  const bool ok = mismatches == 0 && missed == 0 && double_frees > 0 && unknown > 0;
  return {ok, "10000 ops, " + std::to_string(mismatches) + " counter mismatches, " + std::to_string(double_frees) +
                  " double frees and " + std::to_string(unknown) + " unknown handles caught, " + std::to_string(missed) +
                  " missed"};
}

// 7 --------------------------------------------------------------------------
Verdict corpus_metrics() {
  std::vector<fs::path> units;
  for (const auto& e : fs::directory_iterator(kFixtures / "corpus"))
    if (e.path().extension() == ".mc") units.push_back(e.path());
  std::sort(units.begin(), units.end());
  std::uint64_t load_ops = 0, load_slots = 0, compute_ops = 0, compute_slots = 0, cycles = 0, base = 0;
  double worst_miss = 0;
  int recompute_failures = 0;
  for (const auto& u : units) {
    auto in = u;
    in.replace_extension(".json");
    auto c = metrics::compare(cli::read_file(u.string()), nlohmann::json::parse(cli::read_file(in.string())), {},
                              u.stem().string());
    const auto& r = c.report;
    load_ops += r.load_ops;
    load_slots += r.load_slots;
    compute_ops += r.compute_ops;
    compute_slots += r.compute_slots;
    cycles += r.cycles_typeline;
    base += r.cycles_baseline;
    worst_miss = std::max(worst_miss, r.miss_handled_fraction);

    // recompute from the JSONL trace
    std::uint64_t lo = 0, ls = 0, cyc = 0;
    std::istringstream lines(machine::trace_jsonl(c.typeline));
    for (std::string line; std::getline(lines, line);) {
      auto j = nlohmann::json::parse(line);
      cyc += j["cost"].get<std::uint64_t>();
      if (j["kind"] == "control") continue;
      lo += j["loads"].get<std::uint64_t>();
      ls += j["loads"].get<int>() > 0;
    }
    if (cyc != r.cycles_typeline || (lo ? 1.0 - double(ls) / double(lo) : 0.0) != r.load_parallelism)
      ++recompute_failures;
  }
  const double lp = load_ops ? 1.0 - double(load_slots) / double(load_ops) : 0;
  const double cp = compute_ops ? 1.0 - double(compute_slots) / double(compute_ops) : 0;
  const double cr = base ? (double(base) - double(cycles)) / double(base) : 0;

  // monotonicity: one more independent same-type load
  std::mt19937 rng(8);
  int monotone_failures = 0;
  const char* types[] = {"int", "float", "double", "char"};
  for (int iter = 0; iter < 200; ++iter) {
    const int n = 1 + static_cast<int>(rng() % 12);
    std::vector<int> ty;
    for (int i = 0; i < n; ++i) ty.push_back(static_cast<int>(rng() % 4));
    auto source = [&](int count, const std::vector<int>& t) {
      std::string s;
      for (int i = 0; i < count; ++i)
        s += std::string(types[t[i]]) + " g" + std::to_string(i) + "; " + types[t[i]] + " o" + std::to_string(i) + ";\n";
      s += "void main() {\n";
      for (int i = 0; i < count; ++i) s += "  o" + std::to_string(i) + " = g" + std::to_string(i) + ";\n";
      return s + "}\n";
    };
    auto more = ty;
    more.push_back(ty[rng() % ty.size()]);
    const auto a = metrics::compare(source(n, ty), nlohmann::json::object(), {}, "", false).report;
    const auto b = metrics::compare(source(n + 1, more), nlohmann::json::object(), {}, "", false).report;
    if (b.load_parallelism < a.load_parallelism) ++monotone_failures;
  }

  const bool ok = lp >= 0.30 && cp >= 0.10 && cr > 0 && worst_miss <= 0.05 && monotone_failures == 0 &&
                  recompute_failures == 0;
  return {ok, std::to_string(units.size()) + " units: loadParallelism " + fmt("%.3f", lp) + ", computeParallelism " +
                  fmt("%.3f", cp) + ", cycleReduction " + fmt("%.3f", cr) + ", max missHandledFraction " +
                  fmt("%.3f", worst_miss) + ", monotonicity failures " + std::to_string(monotone_failures) +
                  ", recompute failures " + std::to_string(recompute_failures)};
}

// 8 --------------------------------------------------------------------------
Verdict round_trip(const FuzzStats& src, const IrFuzz& ir) {
  int programs = 0, failures = 0;
  auto check = [&](const Program& p) {
    ++programs;
    const std::string text = format_assembly(p);
    try {
      const Program back = parse_assembly(text);
      if (!(back == p) || format_assembly(back) != text) ++failures;
    } catch (const Error&) {
      ++failures;
    }
  };
  for (const auto& p : ir.compiled) check(p);
  for (const auto& p : src.compiled) check(p);

  int compiles = 0, nondeterministic = 0;
  std::vector<std::string> sources(src.sources.begin(), src.sources.begin() + std::min<std::size_t>(200, src.sources.size()));
  sources.push_back(cli::read_file((kFixtures / "fig5.mc").string()));
  for (const auto& e : fs::directory_iterator(kFixtures / "corpus"))
    if (e.path().extension() == ".mc") sources.push_back(cli::read_file(e.path().string()));
  for (const auto& s : sources) {
    ++compiles;
    if (format_assembly(compiler::compile(metrics::lower_source(s))) !=
        format_assembly(compiler::compile(metrics::lower_source(s))))
      ++nondeterministic;
  }
  return {failures == 0 && nondeterministic == 0,
          std::to_string(programs) + " programs round-tripped with " + std::to_string(failures) + " failures; " +
              std::to_string(compiles) + " sources compiled twice with " + std::to_string(nondeterministic) +
              " differences"};
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, Verdict>> results;
  results.emplace_back("SDT reproduction", sdt_reproduction());
  results.emplace_back("Fig-5 regression", fig5_regression());

  const FuzzStats fuzz = source_fuzz();
  results.emplace_back("semantic equivalence",
                       Verdict{fuzz.mismatched == 0 && fuzz.programs >= 1000 && fuzz.seconds < 60,
                               std::to_string(fuzz.programs) + " programs (plus " + std::to_string(fuzz.trapped) +
                                   " trapping), " + std::to_string(fuzz.mismatched) + " mismatches, " +
                                   fmt("%.1f s", fuzz.seconds)});
  results.emplace_back("cycle dominance",
                       Verdict{fuzz.slower == 0, std::to_string(fuzz.slower) + " programs slower than baseline, " +
                                                     std::to_string(fuzz.spilled) + " with spills"});

  const IrFuzz irf = ir_fuzz();
  results.emplace_back("cluster legality",
                       Verdict{irf.violations == 0 && irf.over_cap == 0 && irf.seconds < 60,
                               std::to_string(irf.blocks) + " blocks, " + std::to_string(irf.violations) +
                                   " invalid programs, " + std::to_string(irf.over_cap) + " oversized clusters, " +
                                   fmt("%.1f s", irf.seconds)});
  results.emplace_back("heap oracle", heap_oracle());
  results.emplace_back("corpus metrics", corpus_metrics());
  results.emplace_back("round trip and determinism", round_trip(fuzz, irf));

  bool all = true;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& [name, v] = results[i];
    all = all && v.pass;
    std::cout << "criterion " << i + 1 << " " << (v.pass ? "PASS" : "FAIL") << " " << name << ": " << v.detail << '\n';
  }
  return all ? 0 : 1;
}
