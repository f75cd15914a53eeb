#include <catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "typeline/analyzer/analyzer.hpp"
#include "typeline/frontend/parser.hpp"

using namespace typeline;
using namespace typeline::analyzer;

namespace {

TypeStats stats(std::string_view src, double weight = kDefaultLoopWeight) {
  return collect_stats(minic::parse_minic(src), weight);
}

std::vector<TypeStats> fixture() {
  std::ifstream in(TYPELINE_FIXTURES "/figure3a_types.csv");
  REQUIRE(in);
  return read_types_csv(in);
}

TypeStats with_types(std::initializer_list<std::pair<const char*, double>> kv) {
  TypeStats s;
  for (auto [k, v] : kv) s.types[k] = s.weighted[k] = v;
  return s;
}

}  // namespace

TEST_CASE("collect_stats counts declarations and features") {
  auto s = stats("int x; for(int i=0;i<3;i++) a[i]=x;");
  CHECK(s.type("int") == 2);
  CHECK(s.feature("loops") == 1);
  CHECK(s.feature("conditions") == 1);
  CHECK(s.feature("arrayOps") == 1);
  CHECK(s.type("float") == 0);
  // x at depth 0, i inside the loop header at depth 1
  CHECK(s.weighted.at("int") == 1 + 10);

  auto empty = stats("");
  for (auto k : kTypeKeys) CHECK(empty.type(k) == 0);
  for (auto k : kFeatureKeys) CHECK(empty.feature(k) == 0);

  auto q = stats("static const unsigned int k=1;");
  CHECK(q.feature("static") == 1);
  CHECK(q.feature("const") == 1);
  CHECK(q.feature("unsigned") == 1);
  CHECK(q.type("int") == 1);
}

TEST_CASE("collect_stats covers composites, nesting and conditions") {
  auto s = stats(R"(
    struct P { int x; float y; };
    enum C { RED, GREEN };
    typedef const double real;
    real r;
    real t;
    struct P p;
    char buf[4];
    long n;
    int main() {
      int i;
      int j;
      while (i < 2) {
        for (j = 0; j < 2; j++) { double d; buf[j] = buf[i]; }
        if (i == 1) { i = 2; } else { i = 3; }
        i++;
      }
      return 0;
    }
  )");
  CHECK(s.type("struct") == 2);  // the definition and p
  CHECK(s.type("enum") == 1);
  CHECK(s.type("typedef") == 1);
  CHECK(s.type("double") == 3);  // r, t, d
  CHECK(s.feature("const") == 1);  // spelled once, in the typedef
  CHECK(s.type("int") == 3);
  CHECK(s.type("float") == 1);
  CHECK(s.type("char") == 1);
  CHECK(s.type("long") == 1);
  CHECK(s.feature("loops") == 2);
  CHECK(s.feature("conditions") == 3);
  CHECK(s.feature("arrayOps") == 2);
  CHECK(s.weighted.at("double") == 2 + 100);

  auto w1 = collect_stats(minic::parse_minic("int main(){ for(;;){ int a; } return 0; }"), 1);
  CHECK(w1.weighted == w1.types);
  CHECK_THROWS_AS(collect_stats(minic::parse_minic(""), 0), Error);
}

TEST_CASE("aggregate matches an independent recomputation of the fixture") {
  auto rows = fixture();
  REQUIRE(rows.size() == 6);
  auto avg = aggregate(rows);

  // Column sums taken straight from the file text.
  std::ifstream in(TYPELINE_FIXTURES "/figure3a_types.csv");
  std::string line;
  std::getline(in, line);
  long sums[8] = {};
  int n = 0;
  while (std::getline(in, line)) {
    char name[64];
    long v[8];
    REQUIRE(std::sscanf(line.c_str(), "%63[^,],%ld,%ld,%ld,%ld,%ld,%ld,%ld,%ld", name, &v[0], &v[1], &v[2], &v[3],
                        &v[4], &v[5], &v[6], &v[7]) == 9);
    for (int k = 0; k < 8; ++k) sums[k] += v[k];
    ++n;
  }
  for (int k = 0; k < 8; ++k) CHECK(avg.type(kTypeKeys[k]) == Catch::Approx(double(sums[k]) / n));

  CHECK(avg.type("int") == Catch::Approx(485.0 / 6));
  CHECK(avg.type("float") == Catch::Approx(31.5));
  CHECK(avg.type("char") == Catch::Approx(89.0 / 6));
  CHECK(avg.type("double") == Catch::Approx(80.0 / 6));
  CHECK(avg.type("long") == Catch::Approx(37.0 / 6));
  CHECK(avg.type("struct") == Catch::Approx(12.0));
  CHECK(avg.type("typedef") == Catch::Approx(22.0 / 6));
  CHECK(avg.type("enum") == Catch::Approx(14.0 / 6));

  CHECK(aggregate({with_types({{"int", 2}}), with_types({{"int", 4}})}).type("int") == 3);
  CHECK_THROWS_MATCHES(aggregate({}), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == ErrorCode::EmptyCorpus;
                       }));
}

TEST_CASE("select_sdt examples") {
  auto avg = aggregate(fixture());
  CHECK(select_sdt(avg, 4) == std::vector<std::string>{"int", "float", "char", "double"});
  auto set = select_sdt(avg, 4);
  CHECK(std::set<std::string>(set.begin(), set.end()) == std::set<std::string>{"int", "float", "double", "char"});
  CHECK(select_sdt(avg, 1) == std::vector<std::string>{"int"});
  CHECK(select_sdt(TypeStats{}, 2) == std::vector<std::string>{"int", "float"});
  CHECK(select_sdt(TypeStats{}, 4) == std::vector<std::string>{"int", "float", "double", "char"});
  CHECK(select_sdt(with_types({{"long", 1000}, {"char", 1}}), 1) == std::vector<std::string>{"char"});
  CHECK_THROWS_AS(select_sdt(avg, 5), Error);

  auto loopy = stats("float a; float b; int main(){ for(;;){ char c; } return 0; }");
  CHECK(select_sdt(loopy, 1, false) == std::vector<std::string>{"float"});
  CHECK(select_sdt(loopy, 1, true) == std::vector<std::string>{"char"});
}

TEST_CASE("aggregate of a singleton is the identity") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> count(0, 500);
  for (int trial = 0; trial < 200; ++trial) {
    TypeStats s;
    for (auto k : kTypeKeys) s.types[std::string(k)] = s.weighted[std::string(k)] = count(rng);
    for (auto k : kFeatureKeys) s.features[std::string(k)] = count(rng);
    auto a = aggregate({s});
    CHECK(a.types == s.types);
    CHECK(a.features == s.features);
    CHECK(a.weighted == s.weighted);
  }
}

TEST_CASE("selection is scale invariant and monotone") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> count(0, 60);
  std::uniform_int_distribution<int> kd(1, 4);
  std::uniform_int_distribution<int> factor(2, 1000);
  std::uniform_int_distribution<int> which(0, 4);
  for (int trial = 0; trial < 2000; ++trial) {
    TypeStats s;
    for (auto k : kBaseTypes) s.types[std::string(k)] = count(rng);
    const auto k = static_cast<std::size_t>(kd(rng));
    const auto base = select_sdt(s, k);

    TypeStats scaled = s;
    const double c = factor(rng) / 7.0;
    for (auto& [key, v] : scaled.types) v *= c;
    CHECK(select_sdt(scaled, k) == base);

    // More occurrences of t never lower its rank.
    const std::string t(kBaseTypes[static_cast<std::size_t>(which(rng))]);
    auto rank_of = [&](const TypeStats& x) {
      auto r = rank_types(x, false);
      return std::find_if(r.begin(), r.end(), [&](const Ranked& e) { return e.type == t; }) - r.begin();
    };
    TypeStats more = s;
    more.types[t] += 1 + count(rng);
    CHECK(rank_of(more) <= rank_of(s));
    if (std::find(base.begin(), base.end(), t) != base.end()) {
      auto after = select_sdt(more, k);
      CHECK(std::find(after.begin(), after.end(), t) != after.end());
    }
  }
}

TEST_CASE("stats CSV round trip") {
  auto rows = fixture();
  std::ifstream fin(TYPELINE_FIXTURES "/figure3c_features.csv");
  read_features_csv(fin, rows);
  REQUIRE(rows.size() == 6);
  CHECK(rows[0].unit == "astar");
  CHECK(rows[0].feature("arrayOps") == 112);
  CHECK(rows[5].feature("const") == 155);

  std::ostringstream out;
  write_types_csv(out, rows);
  CHECK(out.str().rfind("unit,int,float,double,long,char,struct,enum,typedef,score\n", 0) == 0);
  CHECK(out.str().find("astar,61,0,0,0,1,0,0,0,62\n") != std::string::npos);
  std::istringstream back(out.str());
  auto again = read_types_csv(back);
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(again[i].types == rows[i].types);

  std::ostringstream fout;
  write_features_csv(fout, rows);
  std::istringstream fback(fout.str());
  std::vector<TypeStats> fr;
  read_features_csv(fback, fr);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(fr[i].features == rows[i].features);

  std::istringstream bad("unit,int\nx,1\n");
  CHECK_THROWS_AS(read_types_csv(bad), Error);
  std::istringstream neg("unit,int,float,double,long,char,struct,enum,typedef\nx,-1,0,0,0,0,0,0,0\n");
  CHECK_THROWS_AS(read_types_csv(neg), Error);
}
