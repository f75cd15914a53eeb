#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "typeline/heap.hpp"
#include "typeline/io.hpp"

namespace typeline::machine {

enum class IssueKind : std::uint8_t { LoadCluster, OpCluster, Scalar, Traditional, Control };

constexpr std::string_view to_string(IssueKind k) {
  switch (k) {
    case IssueKind::LoadCluster: return "load-cluster";
    case IssueKind::OpCluster: return "op-cluster";
    case IssueKind::Scalar: return "scalar";
    case IssueKind::Traditional: return "traditional";
    case IssueKind::Control: return "control";
  }
  return "?";
}

/// Bit per register file, in RegClass order.
using LaneSet = std::uint8_t;

inline LaneSet lane_bit(RegClass c) { return static_cast<LaneSet>(1u << static_cast<unsigned>(c)); }

inline std::vector<std::string> lane_names(LaneSet s) {
  static constexpr std::string_view names[] = {"int", "float", "double", "char", "trad"};
  std::vector<std::string> out;
  for (int i = 0; i < kRegClassCount; ++i)
    if (s & (1u << i)) out.emplace_back(names[i]);
  return out;
}

/// One issue slot of the in-order machine. `loads` and `computes` count the
/// load and ALU instructions inside it, `routed` the members that ran on the
/// traditional lane.
struct IssueRecord {
  std::uint64_t cycle_start = 0;
  int cost = 0;
  IssueKind kind = IssueKind::Scalar;
  int members = 0;
  LaneSet lanes = 0;
  int loads = 0;
  int computes = 0;
  int routed = 0;

  friend bool operator==(const IssueRecord&, const IssueRecord&) = default;

  nlohmann::json to_json() const {
    return nlohmann::json{{"cycleStart", cycle_start}, {"cost", cost},      {"kind", std::string(to_string(kind))},
                          {"memberCount", members},   {"laneSet", lane_names(lanes)},
                          {"loads", loads},           {"computes", computes}, {"routed", routed}};
  }
};

/// Running sums over all issues; kept even when individual records are not.
struct Totals {
  std::uint64_t cycles = 0;
  std::uint64_t issues = 0;
  std::uint64_t ops = 0;            // members of non-control issues
  std::uint64_t load_ops = 0;
  std::uint64_t load_slots = 0;     // issues containing at least one load
  std::uint64_t compute_ops = 0;
  std::uint64_t compute_slots = 0;
  std::uint64_t routed_ops = 0;
  std::uint64_t rerouted_at_runtime = 0;
  std::uint64_t control_issues = 0;
  std::map<int, std::uint64_t> cluster_sizes;  // members per load/op cluster

  friend bool operator==(const Totals&, const Totals&) = default;
};

struct ExecTrace {
  Totals totals;
  std::vector<IssueRecord> issues;
  Outputs outputs;
  ObjectHeap heap;
  std::vector<Value> memory;
  std::vector<std::vector<Value>> registers;  // per register file; empty for the baseline

  std::uint64_t cycles() const { return totals.cycles; }
};

class TraceBuilder {
 public:
  explicit TraceBuilder(bool keep) : keep_(keep) {}

  void add(IssueRecord r) {
    r.cycle_start = t_.cycles;
    t_.cycles += static_cast<std::uint64_t>(r.cost);
    ++t_.issues;
    if (r.kind == IssueKind::Control) {
      ++t_.control_issues;
    } else {
      t_.ops += static_cast<std::uint64_t>(r.members);
      t_.load_ops += static_cast<std::uint64_t>(r.loads);
      t_.compute_ops += static_cast<std::uint64_t>(r.computes);
      t_.load_slots += r.loads > 0;
      t_.compute_slots += r.computes > 0;
      t_.routed_ops += static_cast<std::uint64_t>(r.routed);
      if (r.kind == IssueKind::LoadCluster || r.kind == IssueKind::OpCluster) ++t_.cluster_sizes[r.members];
    }
    if (keep_) records_.push_back(r);
  }

  void rerouted(int n) { t_.rerouted_at_runtime += static_cast<std::uint64_t>(n); }

  const Totals& totals() const { return t_; }

  void finish(ExecTrace& out) {
    out.totals = t_;
    out.issues = std::move(records_);
  }

 private:
  bool keep_;
  Totals t_;
  std::vector<IssueRecord> records_;
};

inline std::string trace_jsonl(const ExecTrace& t) {
  std::string out;
  for (const auto& r : t.issues) out += r.to_json().dump() + "\n";
  return out;
}

}  // namespace typeline::machine
