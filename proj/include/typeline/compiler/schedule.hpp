#pragma once

// Dependence analysis and greedy clustering of one IR block.

#include <algorithm>
#include <set>

#include <json.hpp>

#include "typeline/compiler/isel.hpp"
#include "typeline/validate.hpp"

namespace typeline::compiler {

struct Config {
  int window = 8;
  int load_cap = kLoadClusterCap;
  int op_cap = kOpClusterCap;
  LaneConfig lanes;
  int unroll = 1;
  bool relax = false;
  bool cluster = true;
  CostTable costs = CostTable::defaults();

  /// Reads `{"window", "caps": {"load", "op"}, "lanes": {"float", "double", "char"}, "unroll", "relax"}`
  /// over `base`. Unknown keys are rejected.
  static Config from_json(const nlohmann::json& j);
  static Config from_json(const nlohmann::json& j, Config base) {
    auto bad = [](const std::string& why) { return Error(ErrorCode::InvalidConfig, why); };
    if (!j.is_object()) throw bad("config must be a JSON object");
    auto positive = [&](const nlohmann::json& v, const std::string& key) {
      if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 1'000'000)
        throw bad(key + " must be a positive integer");
      return static_cast<int>(v.get<long long>());
    };
    auto flag = [&](const nlohmann::json& v, const std::string& key) {
      if (!v.is_boolean()) throw bad(key + " must be true or false");
      return v.get<bool>();
    };
    for (const auto& [key, v] : j.items()) {
      if (key == "window") base.window = positive(v, key);
      else if (key == "unroll") base.unroll = positive(v, key);
      else if (key == "relax") base.relax = flag(v, key);
      else if (key == "cluster") base.cluster = flag(v, key);
      else if (key == "caps") {
        if (!v.is_object()) throw bad("caps must be an object");
        for (const auto& [k, c] : v.items()) {
          if (k == "load") base.load_cap = positive(c, "caps.load");
          else if (k == "op") base.op_cap = positive(c, "caps.op");
          else throw bad("unknown cap " + k);
        }
      } else if (key == "lanes") {
        if (!v.is_object()) throw bad("lanes must be an object");
        for (const auto& [k, c] : v.items()) {
          if (k == "float") base.lanes.float_line = flag(c, "lanes.float");
          else if (k == "double") base.lanes.double_line = flag(c, "lanes.double");
          else if (k == "char") base.lanes.char_line = flag(c, "lanes.char");
          else if (k == "int") {
            if (!flag(c, "lanes.int")) throw Error(ErrorCode::ProtectedLane, "the int line cannot be disabled");
          } else {
            throw bad("unknown lane " + k);
          }
        }
      } else {
        throw bad("unknown config key " + key);
      }
    }
    if (!base.relax && (base.load_cap > kLoadClusterCap || base.op_cap > kOpClusterCap))
      throw bad("caps above 16/4 need relax");
    return base;
  }
};

inline Config Config::from_json(const nlohmann::json& j) { return from_json(j, Config{}); }

// ---------------------------------------------------------------------------
// Dependences
// ---------------------------------------------------------------------------

enum class DepKind : std::uint8_t { Raw, War, Waw };

struct Dependence {
  std::size_t from = 0;
  std::size_t to = 0;
  DepKind kind = DepKind::Raw;
  bool memory = false;

  friend bool operator==(const Dependence&, const Dependence&) = default;
};

/// Name-based disambiguation: distinct symbols never alias, accesses through a
/// pointer alias everything, any indexed access covers its whole array.
inline bool may_alias(const ir::MemRef& a, const ir::MemRef& b) {
  using M = ir::MemRef::Mode;
  if (a.mode == M::Indirect || b.mode == M::Indirect) return true;
  if (a.symbol != b.symbol) return false;
  if (a.mode == M::Direct && b.mode == M::Direct) return a.offset == b.offset;
  return true;
}

inline std::vector<Dependence> hazards(const ir::Block& b) {
  std::vector<Dependence> out;
  const auto& ops = b.ops;
  auto defines = [](const ir::Op& op, ir::VReg r) { return op.dst != ir::kNoReg && op.dst == r; };
  for (std::size_t j = 0; j < ops.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const ir::Op &x = ops[i], &y = ops[j];
      std::optional<Dependence> d;
      auto uses_y = y.uses();
      auto uses_x = x.uses();
      if (x.dst != ir::kNoReg && std::find(uses_y.begin(), uses_y.end(), x.dst) != uses_y.end())
        d = Dependence{i, j, DepKind::Raw, false};
      else if (y.dst != ir::kNoReg && defines(x, y.dst))
        d = Dependence{i, j, DepKind::Waw, false};
      else if (y.dst != ir::kNoReg && std::find(uses_x.begin(), uses_x.end(), y.dst) != uses_x.end())
        d = Dependence{i, j, DepKind::War, false};
      if (!d) {
        const bool mx = x.reads_memory() || x.writes_memory(), my = y.reads_memory() || y.writes_memory();
        if ((x.touches_heap() && (my || y.touches_heap())) || (y.touches_heap() && mx)) {
          d = Dependence{i, j, DepKind::Waw, true};
        } else if (mx && my && (x.writes_memory() || y.writes_memory()) && may_alias(x.mem, y.mem)) {
          const DepKind k = x.writes_memory() ? (y.writes_memory() ? DepKind::Waw : DepKind::Raw) : DepKind::War;
          d = Dependence{i, j, k, true};
        }
      }
      if (d) out.push_back(*d);
    }
  }
  return out;
}

inline std::vector<std::vector<std::size_t>> predecessors(const ir::Block& b) {
  std::vector<std::vector<std::size_t>> preds(b.ops.size());
  for (const auto& d : hazards(b)) preds[d.to].push_back(d.from);
  return preds;
}

// ---------------------------------------------------------------------------
// Schedules
// ---------------------------------------------------------------------------

enum class ClusterKind : std::uint8_t { LoadCluster, OpCluster, Scalar, Traditional };

constexpr std::string_view to_string(ClusterKind k) {
  switch (k) {
    case ClusterKind::LoadCluster: return "load-cluster";
    case ClusterKind::OpCluster: return "op-cluster";
    case ClusterKind::Scalar: return "scalar";
    case ClusterKind::Traditional: return "traditional";
  }
  return "?";
}

/// One issue. `members` and `absorbed` index the block's ops; absorbed ops are
/// TCU conversions performed on the way into an op cluster.
struct Cluster {
  ClusterKind kind = ClusterKind::Scalar;
  std::vector<std::size_t> members;
  std::vector<std::size_t> absorbed;
  ConvMask mask;
  int cost = 0;  // issue cost without VEN/VDS/PEN/PDS

  bool grouped() const { return kind == ClusterKind::LoadCluster || kind == ClusterKind::OpCluster; }
  friend bool operator==(const Cluster&, const Cluster&) = default;
};

struct BlockSchedule {
  std::vector<Cluster> issues;
  bool fell_back = false;  // clustering did not pay off and the block runs scalar

  friend bool operator==(const BlockSchedule&, const BlockSchedule&) = default;
};

/// The CONV switches needed by the conversions folded into a cluster.
inline ConvMask conversions_for(const Cluster& c, const ir::Block& b) {
  ConvMask m;
  for (std::size_t i : c.absorbed) {
    const ir::Op& op = b.ops[i];
    if (auto bit = ConvMask::bit_for(op.from, op.type)) m.bits |= *bit;
  }
  return m;
}

inline Cluster scalar_issue(const ir::Block& b, std::size_t i, const Config& cfg) {
  const Opcode oc = select(b.ops[i], cfg.lanes);
  return Cluster{oc.traditional ? ClusterKind::Traditional : ClusterKind::Scalar, {i}, {}, {}, cfg.costs.cost(oc)};
}

inline BlockSchedule scalar_schedule(const ir::Block& b, const Config& cfg) {
  BlockSchedule s;
  for (std::size_t i = 0; i < b.ops.size(); ++i) s.issues.push_back(scalar_issue(b, i, cfg));
  return s;
}

/// Cycles of the block body: issue costs plus two wrapper instructions per group
/// and the CONV configuration cycle already inside op-cluster costs.
inline int schedule_cost(const BlockSchedule& s, const Config& cfg) {
  int total = 0;
  for (const auto& c : s.issues) {
    total += c.cost;
    if (c.kind == ClusterKind::LoadCluster) total += cfg.costs.cost(control(Op::VEN)) + cfg.costs.cost(control(Op::VDS));
    if (c.kind == ClusterKind::OpCluster) total += cfg.costs.cost(control(Op::PEN)) + cfg.costs.cost(control(Op::PDS));
  }
  return total;
}

namespace detail {

class Scheduler {
 public:
  Scheduler(const ir::Block& b, const Config& cfg)
      : b_(b), cfg_(cfg), preds_(predecessors(b)), done_(b.ops.size(), false), users_(b.ops.size()) {
    for (std::size_t j = 0; j < b.ops.size(); ++j)
      for (ir::VReg u : b.ops[j].uses())
        for (std::size_t i = 0; i < j; ++i)
          if (b.ops[i].dst == u) users_[i].push_back(j);
  }

  BlockSchedule run() {
    BlockSchedule s;
    std::size_t left = b_.ops.size();
    while (left > 0) {
      Cluster c = next();
      for (std::size_t i : c.members) done_[i] = true;
      for (std::size_t i : c.absorbed) done_[i] = true;
      left -= c.members.size() + c.absorbed.size();
      s.issues.push_back(std::move(c));
    }
    return s;
  }

 private:
  const ir::Op& op(std::size_t i) const { return b_.ops[i]; }

  bool ready(std::size_t i) const {
    if (done_[i]) return false;
    return std::all_of(preds_[i].begin(), preds_[i].end(), [&](std::size_t p) { return done_[p]; });
  }

  bool in_lane(std::size_t i) const { return !select(op(i), cfg_.lanes).traditional; }

  int scalar(std::size_t i) const { return cfg_.costs.cost(select(op(i), cfg_.lanes)); }

  bool absorbable(std::size_t i) const {
    return op(i).kind == ir::OpKind::Convert && is_tcu_convert(op(i), cfg_.lanes) && ready(i) &&
           op(i).dst != b_.term.cond;
  }

  /// Unfinished conversions an ALU op would fold in, or nullopt if it is not
  /// ready even with folding.
  std::optional<std::vector<std::size_t>> folding(std::size_t i) const {
    std::vector<std::size_t> need;
    for (std::size_t p : preds_[i]) {
      if (done_[p]) continue;
      if (!absorbable(p)) return std::nullopt;
      need.push_back(p);
    }
    return need;
  }

  Cluster next() {
    if (cfg_.cluster)
      if (auto c = load_cluster()) return *c;
    // A lone load waits while a same-type load is still pending and other
    // work is ready, so the two can share a cluster later.
    std::optional<std::size_t> pick;
    for (std::size_t i = 0; i < b_.ops.size() && !pick; ++i)
      if (ready(i) && op(i).kind == ir::OpKind::Load && !(cfg_.cluster && has_peer(i))) pick = i;
    if (pick) return scalar_issue(b_, *pick, cfg_);
    if (cfg_.cluster)
      if (auto c = op_cluster()) return *c;
    for (std::size_t i = 0; i < b_.ops.size() && !pick; ++i)
      if (ready(i) && op(i).kind != ir::OpKind::Convert && op(i).kind != ir::OpKind::Load) pick = i;
    for (std::size_t i = 0; i < b_.ops.size() && !pick; ++i)
      if (ready(i) && op(i).kind == ir::OpKind::Load) pick = i;
    for (std::size_t i = 0; i < b_.ops.size() && !pick; ++i)
      if (ready(i)) pick = i;
    return scalar_issue(b_, *pick, cfg_);
  }

  bool has_peer(std::size_t i) const {
    if (!in_lane(i)) return false;
    for (std::size_t j = 0; j < b_.ops.size(); ++j)
      if (j != i && !done_[j] && op(j).kind == ir::OpKind::Load && op(j).type == op(i).type && in_lane(j)) return true;
    return false;
  }

  std::optional<Cluster> load_cluster() const {
    std::vector<std::pair<ValueType, std::vector<std::size_t>>> by_type;
    for (std::size_t i = 0; i < b_.ops.size(); ++i) {
      if (!ready(i) || op(i).kind != ir::OpKind::Load || !in_lane(i)) continue;
      auto it = std::find_if(by_type.begin(), by_type.end(), [&](const auto& e) { return e.first == op(i).type; });
      if (it == by_type.end()) by_type.push_back({op(i).type, {i}});
      else it->second.push_back(i);
    }
    const std::vector<std::size_t>* best = nullptr;
    for (const auto& [t, v] : by_type)
      if (!best || v.size() > best->size()) best = &v;
    if (!best || best->size() < 2) return std::nullopt;
    Cluster c{ClusterKind::LoadCluster, {}, {}, {}, 0};
    int sum = 0;
    for (std::size_t i : *best) {
      if (static_cast<int>(c.members.size()) == cfg_.load_cap) break;
      c.members.push_back(i);
      c.cost = std::max(c.cost, scalar(i));
      sum += scalar(i);
    }
    if (c.members.size() < 2 || c.cost >= sum) return std::nullopt;
    return c;
  }

  std::optional<Cluster> op_cluster() const {
    std::vector<std::size_t> window;
    for (std::size_t i = 0; i < b_.ops.size() && static_cast<int>(window.size()) < cfg_.window; ++i)
      if (!done_[i]) window.push_back(i);

    std::vector<std::size_t> cands;
    for (std::size_t i : window) {
      const ir::OpKind k = op(i).kind;
      if ((k == ir::OpKind::Binop || k == ir::OpKind::Compare) && in_lane(i) && folding(i)) cands.push_back(i);
    }

    std::optional<Cluster> best;
    int best_saving = 0;
    for (bool same : {true, false}) {
      auto c = build(cands, same);
      if (!c) continue;
      int sum = 0;
      for (std::size_t i : c->members) sum += scalar(i);
      for (std::size_t i : c->absorbed) sum += scalar(i);
      const int saving = sum - c->cost;
      if (saving > best_saving || (saving == best_saving && best && c->members.size() > best->members.size())) {
        best = c;
        best_saving = saving;
      }
    }
    return best;
  }

  std::optional<Cluster> build(const std::vector<std::size_t>& cands, bool same) const {
    std::vector<std::size_t> members;
    std::set<std::size_t> absorbed;
    std::set<std::pair<ir::VReg, ValueType>> pairs;
    for (std::size_t i : cands) {
      if (static_cast<int>(members.size()) == cfg_.op_cap) break;
      if (!members.empty()) {
        const ValueType t0 = op(members.front()).type;
        if (same && op(i).type != t0) continue;
        if (!same && std::any_of(members.begin(), members.end(), [&](std::size_t m) { return op(m).type == op(i).type; }))
          continue;
      }
      auto need = *folding(i);
      auto p = pairs;
      bool clash = false;
      for (std::size_t cv : need)
        if (!absorbed.count(cv) && !p.insert({op(cv).src[0], op(cv).type}).second) clash = true;
      if (clash) continue;
      pairs = std::move(p);
      absorbed.insert(need.begin(), need.end());
      members.push_back(i);
    }
    // A folded conversion never reaches a register, so every reader must be in the cluster.
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t cv : absorbed) {
        bool contained = std::all_of(users_[cv].begin(), users_[cv].end(), [&](std::size_t u) {
          return std::find(members.begin(), members.end(), u) != members.end();
        });
        if (contained) continue;
        members.erase(std::remove_if(members.begin(), members.end(),
                                     [&](std::size_t m) {
                                       const auto& p = preds_[m];
                                       return std::find(p.begin(), p.end(), cv) != p.end();
                                     }),
                      members.end());
        changed = true;
        break;
      }
      if (changed) {
        absorbed.clear();
        for (std::size_t m : members)
          for (std::size_t p : preds_[m])
            if (!done_[p]) absorbed.insert(p);
      }
    }
    if (members.size() < 2) return std::nullopt;
    if (!same) {
      std::set<ValueType> types;
      for (std::size_t m : members) types.insert(op(m).type);
      if (types.size() != members.size()) return std::nullopt;
    }
    Cluster c{ClusterKind::OpCluster, members, {absorbed.begin(), absorbed.end()}, {}, 0};
    c.mask = conversions_for(c, b_);
    int sum = 0;
    for (std::size_t m : members) {
      c.cost = std::max(c.cost, scalar(m));
      sum += scalar(m);
    }
    for (std::size_t a : c.absorbed) sum += scalar(a);
    if (c.mask.bits) c.cost += cfg_.costs.cost(control(Op::CONV));
    if (c.cost >= sum) return std::nullopt;
    return c;
  }

  const ir::Block& b_;
  const Config& cfg_;
  std::vector<std::vector<std::size_t>> preds_;
  std::vector<bool> done_;
  std::vector<std::vector<std::size_t>> users_;
};

}  // namespace detail

/// Greedy list scheduling. Two or more ready loads of one type fold into a
/// load cluster (cap 16); otherwise ready ALU ops within the window fold into
/// an op cluster of at most 4; otherwise one op issues, loads last. A block whose clustered cost, wrappers included, is not below its scalar
/// cost is scheduled scalar.
inline BlockSchedule schedule_block(const ir::Block& b, const Config& cfg) {
  BlockSchedule scalar = scalar_schedule(b, cfg);
  if (!cfg.cluster) return scalar;
  BlockSchedule s = detail::Scheduler(b, cfg).run();
  if (std::none_of(s.issues.begin(), s.issues.end(), [](const Cluster& c) { return c.grouped(); })) return scalar;
  if (schedule_cost(s, cfg) >= schedule_cost(scalar, cfg)) {
    scalar.fell_back = true;
    return scalar;
  }
  return s;
}

}  // namespace typeline::compiler
