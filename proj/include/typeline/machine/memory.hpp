#pragma once

// Flat word memory shared by the machine and the baseline executor.

#include <json.hpp>

#include "typeline/io.hpp"
#include "typeline/isa.hpp"

namespace typeline::machine {

/// Initial memory image: symbol data, then inputs bound by global name.
/// Word 0 is never mapped.
inline std::vector<Value> build_memory(const std::vector<Symbol>& symbols, std::uint32_t words,
                                       const nlohmann::json& inputs) {
  std::vector<Value> mem(words, Value::zero(ValueType::Long));
  for (const auto& s : symbols) {
    if (s.address == 0 || static_cast<std::uint64_t>(s.address) + s.size() > words)
      throw Error(ErrorCode::MemoryFault, "symbol " + s.name + " lies outside memory");
    std::copy(s.init.begin(), s.init.end(), mem.begin() + s.address);
  }
  if (!inputs.is_object()) throw Error(ErrorCode::InvalidArgument, "inputs must be a JSON object");
  for (auto it = inputs.begin(); it != inputs.end(); ++it) {
    const Symbol* target = nullptr;
    for (const auto& s : symbols)
      if (s.global && s.name == it.key()) target = &s;
    if (!target) throw Error(ErrorCode::UnboundInput, "no global named " + it.key());
    std::vector<Value> w(mem.begin() + target->address, mem.begin() + target->address + target->size());
    bind_input(it.value(), w, it.key());
    std::copy(w.begin(), w.end(), mem.begin() + target->address);
  }
  return mem;
}

inline Outputs collect_outputs(const std::vector<Symbol>& symbols, const std::vector<Value>& mem) {
  Outputs out;
  for (const auto& s : symbols) {
    if (!s.global) continue;
    for (std::uint32_t i = 0; i < s.size(); ++i) out.emplace_back(output_name(s.name, i, s.size()), mem.at(s.address + i));
  }
  return out;
}

inline std::uint32_t checked_address(std::int64_t a, std::size_t words) {
  if (a < 1 || static_cast<std::uint64_t>(a) >= words)
    throw Error(ErrorCode::MemoryFault, "address " + std::to_string(a) + " is not mapped");
  return static_cast<std::uint32_t>(a);
}

inline std::uint32_t checked_index(std::uint32_t base, std::int64_t idx, std::uint32_t len, std::size_t words) {
  if (idx < 0 || idx >= static_cast<std::int64_t>(len))
    throw Error(ErrorCode::MemoryFault, "index " + std::to_string(idx) + " outside length " + std::to_string(len));
  return checked_address(static_cast<std::int64_t>(base) + idx, words);
}

/// Bit-level equality of two output lists (names and typed payloads).
inline bool same_outputs(const Outputs& a, const Outputs& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i].first != b[i].first || !(a[i].second == b[i].second)) return false;
  return true;
}

}  // namespace typeline::machine
