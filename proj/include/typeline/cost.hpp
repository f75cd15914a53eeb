#pragma once

#include <string>
#include <unordered_map>

#include <json.hpp>

#include "typeline/isa.hpp"

namespace typeline {

/// Cycle cost per mnemonic. Defaults are loosely modelled on an Alpha 21264;
/// every entry can be overridden from a JSON file.
class CostTable {
 public:
  static constexpr int kTraditionalOverhead = 2;

  static CostTable defaults() {
    CostTable t;
    for (const Opcode& oc : all_opcodes()) t.costs_[oc] = default_cost(oc);
    return t;
  }

  /// Applies a JSON object `{"MNEMONIC": cycles, ...}` over the defaults.
  static CostTable from_json(const nlohmann::json& j) {
    CostTable t = defaults();
    if (!j.is_object()) throw Error(ErrorCode::InvalidCostTable, "cost table must be a JSON object");
    for (const auto& [key, val] : j.items()) {
      auto oc = lookup_opcode(key);
      if (!oc) throw Error(ErrorCode::InvalidCostTable, "unknown mnemonic '" + key + "'");
      if (!val.is_number_integer() || val.get<long long>() <= 0)
        throw Error(ErrorCode::InvalidCostTable, "cost of " + key + " must be a positive integer");
      t.costs_[*oc] = static_cast<int>(val.get<long long>());
    }
    t.check();
    return t;
  }

  static CostTable from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::InvalidCostTable, e.what());
    }
    return from_json(j);
  }

  nlohmann::json to_json() const {
    nlohmann::json j = nlohmann::json::object();
    for (const Opcode& oc : all_opcodes())
      if (auto it = costs_.find(oc); it != costs_.end()) j[oc.mnemonic()] = it->second;
    return j;
  }

  int cost(const Opcode& oc) const {
    auto it = costs_.find(oc);
    if (it == costs_.end()) throw Error(ErrorCode::MissingCostEntry, "no cost for " + oc.mnemonic());
    return it->second;
  }

  bool contains(const Opcode& oc) const { return costs_.count(oc) != 0; }

  void set(const Opcode& oc, int cycles) {
    if (cycles <= 0) throw Error(ErrorCode::InvalidCostTable, "costs must be positive");
    costs_[oc] = cycles;
  }

  void erase(const Opcode& oc) { costs_.erase(oc); }

  /// The two relations the cluster cost model relies on.
  void check() const {
    if (cost(control(Op::CONV)) != 1) throw Error(ErrorCode::InvalidCostTable, "CONV must cost exactly 1 cycle");
    if (!(cost(typed(Op::ADD, ValueType::Int)) < cost(typed(Op::DIV, ValueType::Float))))
      throw Error(ErrorCode::InvalidCostTable, "ADD.in must be cheaper than DIV.ft");
  }

  static int base_cost(Op op, ValueType t) {
    const bool fp = is_floating(t);
    switch (op) {
      case Op::LD: case Op::ST: return 3;
      case Op::ADD: case Op::SUB: return fp ? 4 : 1;
      case Op::MUL: return fp ? 4 : 7;
      case Op::DIV: return fp ? 12 : 20;
      default: return 1;  // moves, compares, logic, shifts
    }
  }

  static int default_cost(const Opcode& oc) {
    switch (oc.op) {
      case Op::OBJN: return 10;
      case Op::OBJR: return 5;
      case Op::BR: case Op::BNZ: return 1;
      case Op::CVT: case Op::LEA: return 1 + kTraditionalOverhead;
      default: break;
    }
    if (!oc.type) return 1;  // control
    return base_cost(oc.op, *oc.type) + (oc.traditional ? kTraditionalOverhead : 0);
  }

 private:
  std::unordered_map<Opcode, int, OpcodeHash> costs_;
};

inline int instruction_cost(const Instruction& instr, const CostTable& table) { return table.cost(instr.opcode); }

}  // namespace typeline
