#pragma once

// Execution metrics of a compiled program against its sequential baseline.

#include <cstdio>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "typeline/error.hpp"
#include "typeline/machine/memory.hpp"
#include "typeline/machine/trace.hpp"

namespace typeline::metrics {

struct ExecReport {
  std::string unit;
  double load_parallelism = 0;
  double compute_parallelism = 0;
  double cycle_reduction = 0;
  double miss_handled_fraction = 0;
  std::uint64_t cycles_typeline = 0;
  std::uint64_t cycles_baseline = 0;
  std::map<int, std::uint64_t> cluster_histogram;

  // raw counts the fractions are derived from
  std::uint64_t load_ops = 0, load_slots = 0;
  std::uint64_t compute_ops = 0, compute_slots = 0;
  std::uint64_t ops = 0, routed_ops = 0;
};

inline const nlohmann::ordered_json& definitions() {
  static const nlohmann::ordered_json d = {
      {"loadParallelism", "1 - loadSlots/loadOps; loadSlots counts issues holding at least one load (0 when no loads ran)"},
      {"computeParallelism",
       "1 - computeSlots/computeOps over arithmetic, logic and compare instructions (0 when none ran)"},
      {"cycleReduction", "(cyclesBaseline - cyclesTypeline)/cyclesBaseline"},
      {"missHandledFraction", "routedOps/ops; ops counts executed non-control instructions, routedOps those on the traditional lane"},
      {"clusterHistogram", "executed load and op clusters by member count"},
  };
  return d;
}

namespace detail {
inline double one_minus(std::uint64_t slots, std::uint64_t ops) {
  return ops == 0 ? 0.0 : 1.0 - static_cast<double>(slots) / static_cast<double>(ops);
}
}  // namespace detail

/// Metrics of `typeline` with `baseline` as reference. Both must come from
/// the same program and inputs, which is checked through their outputs.
inline ExecReport report(const machine::ExecTrace& typeline, const machine::ExecTrace& baseline, std::string unit = {}) {
  if (!machine::same_outputs(typeline.outputs, baseline.outputs))
    throw Error(ErrorCode::TraceMismatch, "typeline and baseline outputs differ");
  const machine::Totals& t = typeline.totals;
  ExecReport r;
  r.unit = std::move(unit);
  r.load_ops = t.load_ops;
  r.load_slots = t.load_slots;
  r.compute_ops = t.compute_ops;
  r.compute_slots = t.compute_slots;
  r.ops = t.ops;
  r.routed_ops = t.routed_ops;
  r.load_parallelism = detail::one_minus(t.load_slots, t.load_ops);
  r.compute_parallelism = detail::one_minus(t.compute_slots, t.compute_ops);
  r.miss_handled_fraction = t.ops == 0 ? 0.0 : static_cast<double>(t.routed_ops) / static_cast<double>(t.ops);
  r.cycles_typeline = t.cycles;
  r.cycles_baseline = baseline.totals.cycles;
  r.cycle_reduction = r.cycles_baseline == 0 ? 0.0
                                             : (static_cast<double>(r.cycles_baseline) - static_cast<double>(r.cycles_typeline)) /
                                                   static_cast<double>(r.cycles_baseline);
  r.cluster_histogram = t.cluster_sizes;
  return r;
}

// Export ---------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const ExecReport& r) {
  nlohmann::ordered_json hist = nlohmann::ordered_json::object();
  for (const auto& [size, n] : r.cluster_histogram) hist[std::to_string(size)] = n;
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  j["unit"] = r.unit;
  j["loadParallelism"] = r.load_parallelism;
  j["computeParallelism"] = r.compute_parallelism;
  j["cycleReduction"] = r.cycle_reduction;
  j["missHandledFraction"] = r.miss_handled_fraction;
  j["cyclesTypeline"] = r.cycles_typeline;
  j["cyclesBaseline"] = r.cycles_baseline;
  j["clusterHistogram"] = hist;
  j["counts"] = nlohmann::ordered_json{{"loadOps", r.load_ops},         {"loadSlots", r.load_slots},
                                       {"computeOps", r.compute_ops},   {"computeSlots", r.compute_slots},
                                       {"ops", r.ops},                  {"routedOps", r.routed_ops}};
  j["definitions"] = definitions();
  return j;
}

inline std::string to_json_text(const std::vector<ExecReport>& rs) {
  if (rs.size() == 1) return to_json(rs.front()).dump(2) + "\n";
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (const auto& r : rs) a.push_back(to_json(r));
  return a.dump(2) + "\n";
}

inline constexpr const char* kCsvHeader =
    "unit,loadParallelism,computeParallelism,cycleReduction,missHandledFraction,cyclesTypeline,cyclesBaseline";

namespace detail {
inline std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}
}  // namespace detail

/// Header plus one row per report, in the given order.
inline std::string to_csv(const std::vector<ExecReport>& rs) {
  std::ostringstream o;
  o << kCsvHeader << '\n';
  for (const auto& r : rs)
    o << r.unit << ',' << detail::fixed(r.load_parallelism) << ',' << detail::fixed(r.compute_parallelism) << ','
      << detail::fixed(r.cycle_reduction) << ',' << detail::fixed(r.miss_handled_fraction) << ',' << r.cycles_typeline
      << ',' << r.cycles_baseline << '\n';
  return o.str();
}

inline std::string to_table(const std::vector<ExecReport>& rs) {
  std::vector<std::vector<std::string>> cells = {
      {"unit", "load par", "compute par", "cycle red", "miss", "cycles", "baseline", "clusters"}};
  for (const auto& r : rs) {
    std::string hist;
    for (const auto& [size, n] : r.cluster_histogram)
      hist += (hist.empty() ? "" : " ") + std::to_string(size) + "x" + std::to_string(n);
    cells.push_back({r.unit.empty() ? "-" : r.unit, detail::fixed(r.load_parallelism), detail::fixed(r.compute_parallelism),
                     detail::fixed(r.cycle_reduction), detail::fixed(r.miss_handled_fraction),
                     std::to_string(r.cycles_typeline), std::to_string(r.cycles_baseline), hist.empty() ? "-" : hist});
  }
  std::vector<std::size_t> width(cells.front().size(), 0);
  for (const auto& row : cells)
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], row[i].size());
  std::ostringstream o;
  for (const auto& row : cells) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      o << row[i];
      if (i + 1 < row.size()) o << std::string(width[i] - row[i].size() + 2, ' ');
    }
    o << '\n';
  }
  return o.str();
}

enum class Format { Json, Csv, Table };

inline Format parse_format(std::string_view s) {
  if (s == "json") return Format::Json;
  if (s == "csv") return Format::Csv;
  if (s == "table" || s == "text-table") return Format::Table;
  throw Error(ErrorCode::InvalidArgument, "unknown format " + std::string(s));
}

inline std::string export_reports(const std::vector<ExecReport>& rs, Format f) {
  switch (f) {
    case Format::Json: return to_json_text(rs);
    case Format::Csv: return to_csv(rs);
    case Format::Table: return to_table(rs);
  }
  return {};
}

}  // namespace typeline::metrics
