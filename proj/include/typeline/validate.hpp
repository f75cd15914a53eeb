#pragma once

#include <set>
#include <string>
#include <vector>

#include "typeline/isa.hpp"

namespace typeline {

inline constexpr int kLoadClusterCap = 16;
inline constexpr int kOpClusterCap = 4;

struct Violation {
  std::size_t index = 0;
  std::string rule;
  std::string message;

  std::string str() const { return "#" + std::to_string(index) + " [" + rule + "] " + message; }
};

/// A VEN..VDS or PEN..PDS bracket. `members` excludes the wrappers and a leading CONV.
struct Group {
  enum class Kind { Load, Op };
  Kind kind = Kind::Load;
  std::size_t open = 0;
  std::size_t close = 0;
  std::optional<std::size_t> conv;
  std::vector<std::size_t> members;
};

struct GroupScan {
  std::vector<Group> groups;
  std::vector<Violation> problems;
};

inline GroupScan scan_groups(const Program& prog) {
  GroupScan out;
  std::optional<Group> cur;
  for (std::size_t i = 0; i < prog.code.size(); ++i) {
    const Op op = prog.code[i].opcode.op;
    if (op == Op::VEN || op == Op::PEN) {
      if (cur) out.problems.push_back({i, "group-structure", "group opened inside another group"});
      cur = Group{op == Op::VEN ? Group::Kind::Load : Group::Kind::Op, i, i, std::nullopt, {}};
      continue;
    }
    if (op == Op::VDS || op == Op::PDS) {
      const bool matches = cur && ((op == Op::VDS) == (cur->kind == Group::Kind::Load));
      if (!matches) {
        out.problems.push_back({i, "group-structure", std::string(op_name(op)) + " without matching opener"});
        cur.reset();
        continue;
      }
      cur->close = i;
      out.groups.push_back(*cur);
      cur.reset();
      continue;
    }
    if (!cur) continue;
    if (op == Op::CONV && cur->kind == Group::Kind::Op && cur->members.empty() && !cur->conv &&
        prog.code[i].operands.size() == 1) {
      cur->conv = i;
      continue;
    }
    cur->members.push_back(i);
  }
  if (cur) out.problems.push_back({cur->open, "group-structure", "group is never closed"});
  return out;
}

struct ValidateOptions {
  bool relax = false;  // lift the 16/4 cluster caps
};

inline std::vector<Violation> validate(const Program& prog, ValidateOptions opts = {}) {
  std::vector<Violation> out;
  auto add = [&](std::size_t i, std::string rule, std::string msg) {
    out.push_back(Violation{i, std::move(rule), std::move(msg)});
  };

  // labels
  std::set<std::string> names;
  for (const auto& l : prog.labels) {
    if (!names.insert(l.name).second) add(l.index, "duplicate-label", "label " + l.name + " defined twice");
    if (l.index > prog.code.size()) add(l.index, "undefined-label", "label " + l.name + " points past the end");
  }

  // symbols
  for (const auto& s : prog.symbols)
    if (static_cast<std::uint64_t>(s.address) + s.size() > prog.memory_words)
      add(0, "symbol-range", "symbol " + s.name + " lies outside memory");

  GroupScan scan = scan_groups(prog);
  for (auto& p : scan.problems) out.push_back(p);
  std::vector<int> group_of(prog.code.size(), -1);
  for (std::size_t g = 0; g < scan.groups.size(); ++g)
    for (std::size_t i = scan.groups[g].open; i <= scan.groups[g].close; ++i) group_of[i] = static_cast<int>(g);

  // per-instruction rules
  for (std::size_t i = 0; i < prog.code.size(); ++i) {
    const Instruction& ins = prog.code[i];
    if (!is_valid_opcode(ins.opcode)) {
      add(i, "opcode", "opcode not in the instruction set");
      continue;
    }
    if (auto d = check_shape(ins)) add(i, d->code == ErrorCode::LaneMismatch ? "lane" : "shape", d->message);
    if (auto m = ins.conv_mask(); m && ins.opcode.op == Op::CONV && m->reserved_set())
      add(i, "conv-mask-reserved", "CONV mask sets reserved bits 3-7");
    if (const Mem* m = ins.mem()) {
      std::uint64_t end = m->mode == Mem::Mode::Indexed ? std::uint64_t{m->address} + m->length
                                                         : std::uint64_t{m->address} + 1;
      if (m->mode != Mem::Mode::Indirect && end > prog.memory_words)
        add(i, "address-range", "address " + m->str() + " outside memory");
    }
    for (const auto& o : ins.operands)
      if (auto l = std::get_if<LabelRef>(&o); l && !prog.label_index(l->name))
        add(i, "undefined-label", "branch to unknown label " + l->name);
    if (ins.opcode.is_alu() && !ins.opcode.traditional && group_of[i] < 0) {
      for (const Reg& r : ins.uses())
        if (r.cls != reg_class(*ins.opcode.type))
          add(i, "conversion-outside-cluster", "cross-lane source " + r.str() + " outside an op cluster");
    }
  }

  for (const auto& l : prog.labels)
    if (l.index < prog.code.size() && group_of[l.index] >= 0 && scan.groups[group_of[l.index]].open != l.index)
      add(l.index, "branch-into-cluster", "label " + l.name + " points inside a cluster");

  // cluster rules
  for (const Group& g : scan.groups) {
    const std::size_t n = g.members.size();
    if (n < 2) add(g.open, "cluster-size", "cluster has fewer than 2 members");

    std::set<std::pair<int, int>> written;
    for (std::size_t m : g.members)
      for (const Reg& r : prog.code[m].defs())
        if (!written.insert({static_cast<int>(r.cls), r.index}).second)
          add(m, "cluster-hazard", "two members write " + r.str());
    for (std::size_t m : g.members) {
      auto own = prog.code[m].defs();
      for (const Reg& r : prog.code[m].uses()) {
        bool self = std::find(own.begin(), own.end(), r) != own.end();
        if (!self && written.count({static_cast<int>(r.cls), r.index}))
          add(m, "cluster-hazard", "member reads " + r.str() + " written by another member");
      }
    }

    if (g.kind == Group::Kind::Load) {
      if (!opts.relax && n > static_cast<std::size_t>(kLoadClusterCap))
        add(g.open, "load-cluster-cap", "load cluster exceeds 16");
      std::optional<ValueType> lane;
      for (std::size_t m : g.members) {
        const Opcode& oc = prog.code[m].opcode;
        if (!oc.is_load() || oc.traditional) {
          add(m, "cluster-member", oc.mnemonic() + " cannot join a load cluster");
          continue;
        }
        if (lane && *lane != *oc.type) add(m, "load-cluster-type", "load cluster mixes datatypes");
        lane = oc.type;
      }
      if (auto v = std::get_if<VecLen>(&prog.code[g.open].operands.front());
          v && n <= static_cast<std::size_t>(kLoadClusterCap) && static_cast<std::size_t>(v->count) != n)
        add(g.open, "vector-length", "VEN length differs from member count");
    } else {
      if (!opts.relax && n > static_cast<std::size_t>(kOpClusterCap))
        add(g.open, "op-cluster-cap", "op cluster exceeds 4");
      std::vector<ValueType> lanes;
      ConvMask mask;
      if (g.conv) mask = *prog.code[*g.conv].conv_mask();
      for (std::size_t m : g.members) {
        const Instruction& ins = prog.code[m];
        if (!ins.opcode.is_alu() || ins.opcode.traditional) {
          add(m, "cluster-member", ins.opcode.mnemonic() + " cannot join an op cluster");
          continue;
        }
        lanes.push_back(*ins.opcode.type);
        for (const Reg& r : ins.uses())
          if (r.cls != reg_class(*ins.opcode.type) && !mask.allows(class_type(r.cls), *ins.opcode.type))
            add(m, "conversion-not-enabled", "source " + r.str() + " needs a CONV switch that is not set");
      }
      std::set<ValueType> distinct(lanes.begin(), lanes.end());
      if (distinct.size() != 1 && distinct.size() != lanes.size())
        add(g.open, "op-cluster-types", "cluster types neither all-same nor all-distinct");
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Violation& a, const Violation& b) { return a.index < b.index; });
  return out;
}

}  // namespace typeline
