#pragma once

// Datatype and operational-feature statistics over MiniC units, and
// selection of the significant data types (SDTs).

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "typeline/error.hpp"
#include "typeline/frontend/ast.hpp"

namespace typeline::analyzer {

inline constexpr std::array<std::string_view, 8> kTypeKeys = {"int",  "float",  "double", "long",
                                                              "char", "struct", "enum",   "typedef"};
inline constexpr std::array<std::string_view, 6> kFeatureKeys = {"loops",    "conditions", "static",
                                                                 "const",    "unsigned",   "arrayOps"};
// Selectable base types, in tie-break order.
inline constexpr std::array<std::string_view, 5> kBaseTypes = {"int", "float", "double", "char", "long"};
inline constexpr std::array<std::string_view, 4> kSdtOrder = {"int", "float", "double", "char"};

inline constexpr double kDefaultLoopWeight = 10.0;

using Counts = std::map<std::string, double, std::less<>>;

struct TypeStats {
  std::string unit;
  Counts types;
  Counts features;
  Counts weighted;

  TypeStats() {
    for (auto k : kTypeKeys) types[std::string(k)] = weighted[std::string(k)] = 0;
    for (auto k : kFeatureKeys) features[std::string(k)] = 0;
  }

  double type(std::string_view k) const { return types.find(k)->second; }
  double feature(std::string_view k) const { return features.find(k)->second; }
};

namespace detail {

using namespace minic;

class Collector {
 public:
  Collector(const Unit& u, double weight) : unit_(u), weight_(weight) {}

  TypeStats run() {
    for (const auto& s : unit_.structs) {
      bump_type("struct");
      for (const auto& [name, t] : s.fields) declared(t);
    }
    for (std::size_t i = 0; i < unit_.enums.size(); ++i) bump_type("enum");
    for (const auto& t : unit_.typedefs) {
      bump_type("typedef");
      qualifiers(t.type);
    }
    for (const auto& s : unit_.top) stmt(*s);
    for (const auto& f : unit_.functions) {
      for (const auto& p : f->params) decl(*p);
      if (f->body) stmt(*f->body);
    }
    return std::move(out_);
  }

 private:
  const Unit& unit_;
  double weight_;
  int depth_ = 0;
  TypeStats out_;

  double scale() const { return std::pow(weight_, depth_); }

  void bump_type(std::string_view k) {
    out_.types[std::string(k)] += 1;
    out_.weighted[std::string(k)] += scale();
  }
  void bump(std::string_view k) { out_.features[std::string(k)] += 1; }

  static std::string_view key(BaseType b) {
    switch (b) {
      case BaseType::Char: return "char";
      case BaseType::Int: return "int";
      case BaseType::Long: return "long";
      case BaseType::Float: return "float";
      case BaseType::Double: return "double";
      case BaseType::Struct: return "struct";
      case BaseType::Enum: return "enum";
      default: return {};
    }
  }

  void qualifiers(const Type& t) {
    if (t.is_static) bump("static");
    if (t.is_const) bump("const");
    if (t.is_unsigned) bump("unsigned");
  }

  // Qualifiers inherited from a typedef were already counted at the typedef.
  void declared(const Type& t) {
    if (auto k = key(t.base); !k.empty()) bump_type(k);
    Type own = t;
    if (!t.alias.empty())
      for (const auto& td : unit_.typedefs)
        if (td.name == t.alias) {
          own.is_static &= !td.type.is_static;
          own.is_const &= !td.type.is_const;
          own.is_unsigned &= !td.type.is_unsigned;
        }
    qualifiers(own);
  }

  void decl(const VarDecl& d) {
    declared(d.type);
    if (d.init) expr(*d.init);
  }

  void expr(const Expr& e) {
    if (e.kind == ExprKind::Index) bump("arrayOps");
    for (const auto& a : e.args) expr(*a);
  }

  void stmt(const Stmt& s) {
    for (const auto& d : s.decls) decl(*d);
    if (s.target) expr(*s.target);
    if (s.value) expr(*s.value);
    switch (s.kind) {
      case StmtKind::If:
        bump("conditions");
        expr(*s.cond);
        stmt(*s.body);
        if (s.else_body) stmt(*s.else_body);
        return;
      case StmtKind::For:
      case StmtKind::While:
        bump("loops");
        ++depth_;
        if (s.init) stmt(*s.init);
        if (s.cond) {
          bump("conditions");
          expr(*s.cond);
        }
        if (s.step) stmt(*s.step);
        stmt(*s.body);
        --depth_;
        return;
      default:
        if (s.cond) expr(*s.cond);
        for (const auto& c : s.stmts) stmt(*c);
        return;
    }
  }
};

}  // namespace detail

/// Declarations per base type and feature occurrences of one parsed unit.
/// Occurrences inside n nested loops weigh loop_weight^n in `weighted`.
inline TypeStats collect_stats(const minic::Unit& unit, double loop_weight = kDefaultLoopWeight,
                               std::string name = {}) {
  if (!(loop_weight > 0)) throw Error(ErrorCode::InvalidArgument, "loop weight must be positive");
  TypeStats s = detail::Collector(unit, loop_weight).run();
  s.unit = std::move(name);
  return s;
}

/// Arithmetic mean per key.
inline TypeStats aggregate(const std::vector<TypeStats>& corpus) {
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "no units to aggregate");
  TypeStats avg;
  avg.unit = "avg";
  auto add = [](Counts& into, const Counts& from) {
    for (const auto& [k, v] : from) into[k] += v;
  };
  for (const auto& s : corpus) {
    add(avg.types, s.types);
    add(avg.features, s.features);
    add(avg.weighted, s.weighted);
  }
  const double n = static_cast<double>(corpus.size());
  for (Counts* c : {&avg.types, &avg.features, &avg.weighted})
    for (auto& [k, v] : *c) v /= n;
  return avg;
}

struct Ranked {
  std::string type;
  double score = 0;
};

/// All selectable base types ordered by score, ties in kBaseTypes order.
inline std::vector<Ranked> rank_types(const TypeStats& s, bool use_loop_weighting) {
  const Counts& c = use_loop_weighting ? s.weighted : s.types;
  std::vector<Ranked> r;
  for (auto k : kBaseTypes) {
    auto it = c.find(k);
    r.push_back({std::string(k), it == c.end() ? 0.0 : it->second});
  }
  std::stable_sort(r.begin(), r.end(), [](const Ranked& a, const Ranked& b) { return a.score > b.score; });
  return r;
}

/// Top-k SDTs by score. long is ranked but never selected.
inline std::vector<std::string> select_sdt(const TypeStats& s, std::size_t k, bool use_loop_weighting = false) {
  if (k > kSdtOrder.size())
    throw Error(ErrorCode::InvalidArgument, "k must be at most " + std::to_string(kSdtOrder.size()));
  std::vector<std::string> out;
  for (const auto& r : rank_types(s, use_loop_weighting)) {
    if (out.size() == k) break;
    if (std::find(kSdtOrder.begin(), kSdtOrder.end(), r.type) != kSdtOrder.end()) out.push_back(r.type);
  }
  return out;
}

/// Sum of the selectable base-type counts of a unit.
inline double score(const TypeStats& s, bool use_loop_weighting = false) {
  double total = 0;
  for (const auto& r : rank_types(s, use_loop_weighting)) total += r.score;
  return total;
}

// CSV ----------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::string number(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  std::ostringstream o;
  o.precision(17);
  o << v;
  return o.str();
}

template <std::size_t N>
std::vector<std::pair<std::string, Counts>> read_table(std::istream& in, const std::array<std::string_view, N>& keys,
                                                       std::string_view what) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidArgument, std::string(what) + " CSV is empty");
  const auto header = split_csv(line);
  if (header.empty() || header[0] != "unit")
    throw Error(ErrorCode::InvalidArgument, std::string(what) + " CSV must start with a unit column");
  std::vector<int> column(N, -1);
  for (std::size_t i = 1; i < header.size(); ++i) {
    auto it = std::find(keys.begin(), keys.end(), header[i]);
    if (it != keys.end()) column[static_cast<std::size_t>(it - keys.begin())] = static_cast<int>(i);
    else if (header[i] != "score")
      throw Error(ErrorCode::InvalidArgument, std::string(what) + " CSV: unknown column " + header[i]);
  }
  for (std::size_t k = 0; k < N; ++k)
    if (column[k] < 0) throw Error(ErrorCode::InvalidArgument, std::string(what) + " CSV: missing column " + std::string(keys[k]));

  std::vector<std::pair<std::string, Counts>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size())
      throw Error(ErrorCode::InvalidArgument, std::string(what) + " CSV line " + std::to_string(lineno) + ": wrong column count");
    Counts c;
    for (std::size_t k = 0; k < N; ++k) {
      const std::string& cell = cells[static_cast<std::size_t>(column[k])];
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != cell.size() || cell.empty() || !(v >= 0))
        throw Error(ErrorCode::InvalidArgument,
                    std::string(what) + " CSV line " + std::to_string(lineno) + ": bad count '" + cell + "'");
      c[std::string(keys[k])] = v;
    }
    rows.emplace_back(cells[0], std::move(c));
  }
  return rows;
}

}  // namespace detail

/// Rows of a `unit,int,float,...,typedef` table. A trailing score column is ignored.
/// Loop-weighted counts are not part of the schema and mirror the raw counts.
inline std::vector<TypeStats> read_types_csv(std::istream& in) {
  std::vector<TypeStats> out;
  for (auto& [unit, counts] : detail::read_table(in, kTypeKeys, "type")) {
    TypeStats s;
    s.unit = unit;
    s.types = counts;
    s.weighted = counts;
    out.push_back(std::move(s));
  }
  return out;
}

/// Merges a `unit,loops,...,arrayOps` table into `stats` by unit name; unmatched rows are appended.
inline void read_features_csv(std::istream& in, std::vector<TypeStats>& stats) {
  for (auto& [unit, counts] : detail::read_table(in, kFeatureKeys, "feature")) {
    auto it = std::find_if(stats.begin(), stats.end(), [&](const TypeStats& s) { return s.unit == unit; });
    if (it == stats.end()) {
      stats.emplace_back();
      stats.back().unit = unit;
      it = std::prev(stats.end());
    }
    it->features = std::move(counts);
  }
}

inline void write_types_csv(std::ostream& out, const std::vector<TypeStats>& rows, bool use_loop_weighting = false) {
  out << "unit";
  for (auto k : kTypeKeys) out << ',' << k;
  out << ",score\n";
  for (const auto& s : rows) {
    const Counts& c = use_loop_weighting ? s.weighted : s.types;
    out << s.unit;
    for (auto k : kTypeKeys) out << ',' << detail::number(c.find(k)->second);
    out << ',' << detail::number(score(s, use_loop_weighting)) << '\n';
  }
}

inline void write_features_csv(std::ostream& out, const std::vector<TypeStats>& rows) {
  out << "unit";
  for (auto k : kFeatureKeys) out << ',' << k;
  out << '\n';
  for (const auto& s : rows) {
    out << s.unit;
    for (auto k : kFeatureKeys) out << ',' << detail::number(s.feature(k));
    out << '\n';
  }
}

}  // namespace typeline::analyzer
