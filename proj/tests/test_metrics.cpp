#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "typeline/cli.hpp"
#include "typeline/metrics/pipeline.hpp"

using namespace typeline;
using namespace typeline::metrics;
namespace fs = std::filesystem;

namespace {

machine::IssueRecord record(machine::IssueKind kind, int cost, int members, int loads, int computes, int routed = 0) {
  machine::IssueRecord r;
  r.kind = kind;
  r.cost = cost;
  r.members = members;
  r.loads = loads;
  r.computes = computes;
  r.routed = routed;
  return r;
}

machine::ExecTrace trace_of(const std::vector<machine::IssueRecord>& rs) {
  machine::TraceBuilder b(true);
  for (const auto& r : rs) b.add(r);
  machine::ExecTrace t;
  b.finish(t);
  return t;
}

std::string read(const fs::path& p) { return cli::read_file(p.string()); }

nlohmann::json fixture_inputs(const std::string& name) { return nlohmann::json::parse(read(fs::path(TYPELINE_FIXTURES) / name)); }

const char* kTypes[] = {"int", "float", "double", "char"};

/// Straight-line, pointer-free MiniC over the four lane types using only
/// lane-supported operators.
struct LaneProgram {
  std::vector<int> globals;  // type index per global g<i>
  std::vector<std::string> stmts;

  std::string source() const {
    std::string s;
    for (std::size_t i = 0; i < globals.size(); ++i)
      s += std::string(kTypes[globals[i]]) + " g" + std::to_string(i) + "; " + kTypes[globals[i]] + " o" +
           std::to_string(i) + ";\n";
    s += "void main() {\n";
    for (const auto& st : stmts) s += "  " + st + "\n";
    return s + "}\n";
  }
};

LaneProgram arithmetic_program(std::mt19937& rng) {
  LaneProgram p;
  const int n = std::uniform_int_distribution<int>(2, 12)(rng);
  for (int i = 0; i < n; ++i) p.globals.push_back(std::uniform_int_distribution<int>(0, 3)(rng));
  const char* ops[] = {"+", "-", "*"};
  const int stmts = std::uniform_int_distribution<int>(1, 10)(rng);
  for (int s = 0; s < stmts; ++s) {
    const int dst = std::uniform_int_distribution<int>(0, n - 1)(rng);
    std::vector<int> same;
    for (int i = 0; i < n; ++i)
      if (p.globals[static_cast<std::size_t>(i)] == p.globals[static_cast<std::size_t>(dst)]) same.push_back(i);
    auto pick = [&] { return same[std::uniform_int_distribution<std::size_t>(0, same.size() - 1)(rng)]; };
    // char has no lane multiply
    const char* op = ops[rng() % (p.globals[static_cast<std::size_t>(dst)] == 3 ? 2 : 3)];
    p.stmts.push_back("o" + std::to_string(dst) + " = g" + std::to_string(pick()) + " " + op + " g" +
                      std::to_string(pick()) + ";");
  }
  return p;
}

nlohmann::json inputs_for(const LaneProgram& p, std::mt19937& rng) {
  nlohmann::json in = nlohmann::json::object();
  for (std::size_t i = 0; i < p.globals.size(); ++i) {
    const std::string g = "g" + std::to_string(i);
    if (p.globals[i] == 0) in[g] = std::uniform_int_distribution<int>(-1000, 1000)(rng);
    else if (p.globals[i] == 3) in[g] = std::uniform_int_distribution<int>(0, 255)(rng);
    else in[g] = std::uniform_real_distribution<double>(-8, 8)(rng);
  }
  return in;
}

int invoke(std::vector<std::string> args, std::string* out = nullptr, std::string* err = nullptr) {
  args.insert(args.begin(), "typeline");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream o, e;
  const int rc = cli::run_cli(static_cast<int>(argv.size()), argv.data(), o, e);
  if (out) *out = o.str();
  if (err) *err = e.str();
  return rc;
}

fs::path scratch() {
  const fs::path d = fs::temp_directory_path() / ("typeline_test_metrics_" + std::to_string(::getpid()));
  fs::create_directories(d);
  return d;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("report examples") {
  using K = machine::IssueKind;
  auto t = trace_of({record(K::LoadCluster, 3, 4, 4, 0), record(K::LoadCluster, 3, 4, 4, 0),
                     record(K::LoadCluster, 3, 2, 2, 0)});
  auto r = report(t, t);
  CHECK(r.load_parallelism == Catch::Approx(0.7));
  CHECK(r.compute_parallelism == 0);
  CHECK(r.cycle_reduction == 0);

  auto scalar = trace_of({record(K::Scalar, 3, 1, 1, 0), record(K::Scalar, 1, 1, 0, 1), record(K::Scalar, 4, 1, 0, 1)});
  auto s = report(scalar, scalar);
  CHECK(s.load_parallelism == 0);
  CHECK(s.compute_parallelism == 0);
  CHECK(s.cycle_reduction == 0);
  CHECK(s.miss_handled_fraction == 0);

  auto typeline = trace_of({record(K::LoadCluster, 3, 4, 4, 0), record(K::OpCluster, 13, 3, 0, 2)});
  auto baseline = trace_of({record(K::Scalar, 26, 7, 4, 2)});
  CHECK(typeline.cycles() == 16);
  CHECK(report(typeline, baseline).cycle_reduction == Catch::Approx(10.0 / 26));
  CHECK(report(typeline, baseline).cycle_reduction == Catch::Approx(0.385).margin(0.001));

  auto routed = trace_of({record(K::Traditional, 5, 1, 0, 0, 1), record(K::Scalar, 1, 1, 0, 1),
                          record(K::Scalar, 1, 1, 0, 1), record(K::Control, 1, 0, 0, 0)});
  CHECK(report(routed, routed).miss_handled_fraction == Catch::Approx(1.0 / 3));

  machine::ExecTrace other = t;
  other.outputs.push_back({"x", Value::of_int(1)});
  CHECK_THROWS_MATCHES(report(t, other), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::TraceMismatch;
                       }));
}

TEST_CASE("fig5 comparison") {
  auto c = compare(read(fs::path(TYPELINE_FIXTURES) / "fig5.mc"), fixture_inputs("fig5.inputs.json"), {}, "fig5");
  CHECK(c.report.cycles_typeline == 32);
  CHECK(c.report.cycles_baseline == 38);
  CHECK(c.report.load_ops == 5);
  CHECK(c.report.load_slots == 2);
  CHECK(c.report.load_parallelism == Catch::Approx(0.6));
  CHECK(c.report.compute_parallelism == Catch::Approx(0.5));
  CHECK(c.report.miss_handled_fraction == 0);
  CHECK(c.report.cluster_histogram == std::map<int, std::uint64_t>{{3, 1}, {4, 1}});
}

TEST_CASE("export formats") {
  CHECK(to_csv({}) == std::string(kCsvHeader) + "\n");
  CHECK(std::count(kCsvHeader, kCsvHeader + std::strlen(kCsvHeader), ',') == 6);

  auto c = compare(read(fs::path(TYPELINE_FIXTURES) / "fig5.mc"), fixture_inputs("fig5.inputs.json"), {}, "fig5");
  const std::string csv = to_csv({c.report});
  std::istringstream lines(csv);
  std::string header, row, extra;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK_FALSE(std::getline(lines, extra));
  CHECK(std::count(row.begin(), row.end(), ',') == 6);
  CHECK(row == "fig5,0.600000,0.500000,0.157895,0.000000,32,38");

  auto j = nlohmann::json::parse(export_reports({c.report}, Format::Json));
  CHECK(j["loadParallelism"].get<double>() == c.report.load_parallelism);
  CHECK(j["cycleReduction"].get<double>() == c.report.cycle_reduction);
  CHECK(j["cyclesTypeline"] == 32);
  CHECK(j["clusterHistogram"]["4"] == 1);
  CHECK(j["definitions"].contains("missHandledFraction"));
  CHECK(nlohmann::json::parse(j.dump()) == j);
  CHECK(nlohmann::json::parse(export_reports({}, Format::Json)).empty());

  const std::string table = export_reports({c.report}, Format::Table);
  CHECK(table.find("fig5") != std::string::npos);
  CHECK(table.find("3x1 4x1") != std::string::npos);
  CHECK_THROWS_AS(parse_format("xml"), Error);
}

TEST_CASE("report fields recompute from the raw trace") {
  const fs::path dir = fs::path(TYPELINE_FIXTURES) / "corpus";
  int units = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".mc") continue;
    auto in_path = e.path();
    in_path.replace_extension(".json");
    auto c = compare(read(e.path()), nlohmann::json::parse(read(in_path)), {}, e.path().stem().string());

    // Independent tally over the JSONL lines.
    auto tally = [](const machine::ExecTrace& t) {
      std::map<std::string, double> m;
      std::istringstream in(machine::trace_jsonl(t));
      std::string line;
      while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        m["cycles"] += j["cost"].get<double>();
        if (j["kind"] == "control") continue;
        m["loads"] += j["loads"].get<double>();
        m["loadSlots"] += j["loads"].get<int>() > 0;
        m["computes"] += j["computes"].get<double>();
        m["computeSlots"] += j["computes"].get<int>() > 0;
        m["ops"] += j["memberCount"].get<double>();
        m["routed"] += j["routed"].get<double>();
      }
      return m;
    };
    auto t = tally(c.typeline);
    auto b = tally(c.baseline);
    CHECK(c.report.load_parallelism == Catch::Approx(t["loads"] ? 1 - t["loadSlots"] / t["loads"] : 0));
    CHECK(c.report.compute_parallelism == Catch::Approx(t["computes"] ? 1 - t["computeSlots"] / t["computes"] : 0));
    CHECK(c.report.miss_handled_fraction == Catch::Approx(t["routed"] / t["ops"]));
    CHECK(c.report.cycle_reduction == Catch::Approx((b["cycles"] - t["cycles"]) / b["cycles"]));
    CHECK(double(c.report.cycles_typeline) == t["cycles"]);
    CHECK(double(c.report.cycles_baseline) == b["cycles"]);
    ++units;
  }
  CHECK(units >= 4);
}

TEST_CASE("all fractions stay in [0,1] and cycle reduction is non-negative") {
  std::mt19937 rng(3);
  for (int iter = 0; iter < 300; ++iter) {
    LaneProgram p = arithmetic_program(rng);
    auto c = compare(p.source(), inputs_for(p, rng));
    for (double f : {c.report.load_parallelism, c.report.compute_parallelism, c.report.miss_handled_fraction,
                     c.report.cycle_reduction}) {
      CHECK(f >= 0);
      CHECK(f <= 1);
    }
    // lane-only operators on SDT globals never touch the traditional lane
    CHECK(c.report.miss_handled_fraction == 0);
  }
}

TEST_CASE("an extra independent same-type load never lowers load parallelism") {
  std::mt19937 rng(17);
  int checked = 0;
  for (int iter = 0; iter < 400; ++iter) {
    LaneProgram p;
    const int n = std::uniform_int_distribution<int>(1, 12)(rng);
    for (int i = 0; i < n; ++i) {
      p.globals.push_back(std::uniform_int_distribution<int>(0, 3)(rng));
      p.stmts.push_back("o" + std::to_string(i) + " = g" + std::to_string(i) + ";");
    }
    const int t = p.globals[std::uniform_int_distribution<std::size_t>(0, p.globals.size() - 1)(rng)];
    LaneProgram more = p;
    more.globals.push_back(t);
    more.stmts.push_back("o" + std::to_string(n) + " = g" + std::to_string(n) + ";");

    auto before = compare(p.source(), inputs_for(p, rng)).report;
    auto after = compare(more.source(), inputs_for(more, rng)).report;
    INFO(more.source());
    CHECK(after.load_parallelism >= before.load_parallelism);
    ++checked;
  }
  CHECK(checked == 400);
}

TEST_CASE("cli commands and exit codes") {
  const fs::path dir = scratch();
  const std::string fx = TYPELINE_FIXTURES;
  std::string out, err;

  REQUIRE(invoke({"select-sdt", fx + "/figure3a_types.csv"}, &out) == cli::Ok);
  CHECK(out == "int\nfloat\nchar\ndouble\n");
  REQUIRE(invoke({"select-sdt", fx + "/figure3a_types.csv", "-k", "2"}, &out) == cli::Ok);
  CHECK(out == "int\nfloat\n");

  REQUIRE(invoke({"analyze", fx + "/fig5.mc", "--csv", (dir / "stats.csv").string()}) == cli::Ok);
  CHECK(read(dir / "stats.csv") == "unit,int,float,double,long,char,struct,enum,typedef,score\nfig5,6,2,0,0,0,0,0,0,8\n");
  REQUIRE(invoke({"select-sdt", (dir / "stats.csv").string(), "-k", "1"}, &out) == cli::Ok);
  CHECK(out == "int\n");

  const std::string tla = (dir / "fig5.tla").string();
  REQUIRE(invoke({"compile", fx + "/fig5.mc", "-o", tla}) == cli::Ok);
  std::string again;
  REQUIRE(invoke({"compile", fx + "/fig5.mc"}, &again) == cli::Ok);
  CHECK(again == read(tla));

  const std::string trace = (dir / "t.jsonl").string();
  REQUIRE(invoke({"run", tla, "--inputs", fx + "/fig5.inputs.json", "--trace", trace}, &out) == cli::Ok);
  auto j = nlohmann::json::parse(out);
  CHECK(j["outputs"]["s"] == 7);
  CHECK(j["outputs"]["q"] == 2.5);
  CHECK(j["totals"]["cycles"] == 32);
  CHECK(std::count(read(trace).begin(), read(trace).end(), '\n') > 0);

  REQUIRE(invoke({"compare", fx + "/fig5.mc", "--inputs", fx + "/fig5.inputs.json", "--format", "csv"}, &out) == cli::Ok);
  CHECK(out == std::string(kCsvHeader) + "\nfig5,0.600000,0.500000,0.157895,0.000000,32,38\n");
  REQUIRE(invoke({"compare", fx + "/fig5.mc", "--inputs", fx + "/fig5.inputs.json", "--no-cluster", "--format", "json"},
              &out) == cli::Ok);
  CHECK(nlohmann::json::parse(out)["cycleReduction"] == 0.0);

  REQUIRE(invoke({"bench", fx + "/corpus"}, &out) == cli::Ok);
  CHECK(out.rfind(kCsvHeader, 0) == 0);
  CHECK(std::count(out.begin(), out.end(), '\n') >= 5);

  // exit codes
  CHECK(invoke({}, nullptr, &err) == cli::Usage);
  CHECK(invoke({"frobnicate"}, nullptr, &err) == cli::Usage);
  CHECK(invoke({"select-sdt", fx + "/figure3a_types.csv", "-k", "9"}, nullptr, &err) == cli::Usage);
  write(dir / "bad.json", "{\"window\": 0}");
  CHECK(invoke({"compile", fx + "/fig5.mc", "--config", (dir / "bad.json").string()}, nullptr, &err) == cli::Usage);

  write(dir / "broken.mc", "int x; void main() { x = ; }");
  CHECK(invoke({"compile", (dir / "broken.mc").string()}, nullptr, &err) == cli::CompileError);
  CHECK(err.find("SyntaxError") != std::string::npos);

  write(dir / "div.mc", "int x; int y; int z; void main() { z = x / y; }");
  CHECK(invoke({"compare", (dir / "div.mc").string()}, nullptr, &err) == cli::RuntimeTrap);
  CHECK(err.find("IntDivisionByZero") != std::string::npos);

  write(dir / "open.tla", ".mem 2\n.global a 1 = in:0\nVEN 1\nLD.in r0, [1]\n");
  CHECK(invoke({"run", (dir / "open.tla").string()}, nullptr, &err) == cli::ValidationError);

  fs::remove_all(dir);
}
