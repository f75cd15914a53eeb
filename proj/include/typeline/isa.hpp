#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "typeline/alu.hpp"
#include "typeline/value.hpp"

namespace typeline {

// ---------------------------------------------------------------------------
// Opcodes
// ---------------------------------------------------------------------------

enum class Op : std::uint8_t {
  LD, ST, MOV,
  ADD, SUB, MUL, DIV,
  CMPE, CMPEG, CMPEs, CMPS, CMP,
  AND, OR, XOR, NOR, XNOR, SRA, SRL, SLL,
  VEN, VDS, PEN, PDS, FTEN, DBEN, CHEN, FTDS, DBDS, CHDS, CONV,
  OBJN, OBJR,
  // traditional-lane only
  CVT, LEA, BR, BNZ,
};

constexpr std::string_view op_name(Op op) {
  switch (op) {
    case Op::LD: return "LD";
    case Op::ST: return "ST";
    case Op::MOV: return "MOV";
    case Op::ADD: return "ADD";
    case Op::SUB: return "SUB";
    case Op::MUL: return "MUL";
    case Op::DIV: return "DIV";
    case Op::CMPE: return "CMPE";
    case Op::CMPEG: return "CMPEG";
    case Op::CMPEs: return "CMPEs";
    case Op::CMPS: return "CMPS";
    case Op::CMP: return "CMP";
    case Op::AND: return "AND";
    case Op::OR: return "OR";
    case Op::XOR: return "XOR";
    case Op::NOR: return "NOR";
    case Op::XNOR: return "XNOR";
    case Op::SRA: return "SRA";
    case Op::SRL: return "SRL";
    case Op::SLL: return "SLL";
    case Op::VEN: return "VEN";
    case Op::VDS: return "VDS";
    case Op::PEN: return "PEN";
    case Op::PDS: return "PDS";
    case Op::FTEN: return "FTEN";
    case Op::DBEN: return "DBEN";
    case Op::CHEN: return "CHEN";
    case Op::FTDS: return "FTDS";
    case Op::DBDS: return "DBDS";
    case Op::CHDS: return "CHDS";
    case Op::CONV: return "CONV";
    case Op::OBJN: return "OBJ.n";
    case Op::OBJR: return "OBJ.r";
    case Op::CVT: return "CVT";
    case Op::LEA: return "LEA";
    case Op::BR: return "BR";
    case Op::BNZ: return "BNZ";
  }
  return "?";
}

enum class Category : std::uint8_t { Integer, Float, Double, Char, Control, Memory, Traditional };

/// A mnemonic: base operation, optional type suffix, and whether it belongs to
/// the traditional (`T.`) lane rather than Table 2.
struct Opcode {
  Op op = Op::ADD;
  std::optional<ValueType> type;
  bool traditional = false;

  friend bool operator==(const Opcode&, const Opcode&) = default;

  std::uint32_t key() const {
    return (static_cast<std::uint32_t>(op) << 8) | (type ? 1u + static_cast<std::uint32_t>(*type) : 0u) << 1 |
           (traditional ? 1u : 0u);
  }

  std::string mnemonic() const {
    std::string s = traditional ? "T." : "";
    s += op_name(op);
    if (type) {
      s += '.';
      s += value_suffix(*type);
    }
    return s;
  }

  Category category() const {
    if (traditional) return Category::Traditional;
    if (op == Op::OBJN || op == Op::OBJR) return Category::Memory;
    if (!type) return Category::Control;
    switch (*type) {
      case ValueType::Int: return Category::Integer;
      case ValueType::Float: return Category::Float;
      case ValueType::Double: return Category::Double;
      case ValueType::Char: return Category::Char;
      case ValueType::Long: return Category::Traditional;
    }
    return Category::Control;
  }

  bool is_load() const { return op == Op::LD; }
  bool is_store() const { return op == Op::ST; }
  bool is_alu() const { return op >= Op::ADD && op <= Op::SLL; }
  bool is_compare() const { return op >= Op::CMPE && op <= Op::CMP; }
  bool is_branch() const { return op == Op::BR || op == Op::BNZ; }
  bool is_group_control() const {
    return op == Op::VEN || op == Op::VDS || op == Op::PEN || op == Op::PDS;
  }
  bool is_lane_control() const { return op >= Op::FTEN && op <= Op::CHDS; }
};

struct OpcodeHash {
  std::size_t operator()(const Opcode& o) const noexcept { return o.key(); }
};

namespace detail {

inline void push_typed(std::vector<Opcode>& out, ValueType t, std::initializer_list<Op> ops, bool trad) {
  for (Op op : ops) out.push_back(Opcode{op, t, trad});
}

inline std::vector<Opcode> build_opcodes() {
  std::vector<Opcode> out;
  // Table 2
  push_typed(out, ValueType::Int,
             {Op::LD, Op::ST, Op::MOV, Op::ADD, Op::SUB, Op::MUL, Op::DIV, Op::CMPE, Op::CMPEG, Op::CMPEs,
              Op::CMPS, Op::AND, Op::OR, Op::XOR, Op::NOR, Op::XNOR, Op::SRA, Op::SRL},
             false);
  push_typed(out, ValueType::Float, {Op::LD, Op::ST, Op::MOV, Op::ADD, Op::SUB, Op::MUL, Op::DIV, Op::CMP},
             false);
  push_typed(out, ValueType::Double, {Op::LD, Op::ST, Op::MOV, Op::ADD, Op::SUB, Op::MUL, Op::CMP}, false);
  push_typed(out, ValueType::Char,
             {Op::LD, Op::ST, Op::MOV, Op::ADD, Op::SUB, Op::CMPE, Op::CMPEG, Op::CMPEs, Op::CMPS, Op::AND,
              Op::OR, Op::XOR, Op::NOR, Op::XNOR},
             false);
  for (Op op : {Op::VEN, Op::VDS, Op::PEN, Op::PDS, Op::FTEN, Op::DBEN, Op::CHEN, Op::FTDS, Op::DBDS,
                Op::CHDS, Op::CONV, Op::OBJN, Op::OBJR})
    out.push_back(Opcode{op, std::nullopt, false});

  // Traditional lane: the base-ISA subset the fallback executor understands.
  for (ValueType t : {ValueType::Int, ValueType::Float, ValueType::Double, ValueType::Char, ValueType::Long}) {
    push_typed(out, t, {Op::LD, Op::ST, Op::MOV, Op::ADD, Op::SUB, Op::MUL, Op::DIV}, true);
    if (is_floating(t)) {
      push_typed(out, t, {Op::CMP}, true);
    } else {
      push_typed(out, t,
                 {Op::CMPE, Op::CMPEG, Op::CMPEs, Op::CMPS, Op::AND, Op::OR, Op::XOR, Op::NOR, Op::XNOR,
                  Op::SRA, Op::SRL, Op::SLL},
                 true);
    }
  }
  for (Op op : {Op::CVT, Op::LEA, Op::BR, Op::BNZ}) out.push_back(Opcode{op, std::nullopt, true});
  return out;
}

}  // namespace detail

/// Every mnemonic the assembler accepts, Table 2 first.
inline const std::vector<Opcode>& all_opcodes() {
  static const std::vector<Opcode> ops = detail::build_opcodes();
  return ops;
}

inline std::optional<Opcode> lookup_opcode(std::string_view mnemonic) {
  static const auto table = [] {
    std::unordered_map<std::string, Opcode> m;
    for (const auto& o : all_opcodes()) m.emplace(o.mnemonic(), o);
    return m;
  }();
  auto it = table.find(std::string(mnemonic));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

inline bool is_valid_opcode(const Opcode& o) {
  const auto& all = all_opcodes();
  return std::find(all.begin(), all.end(), o) != all.end();
}

inline Opcode typed(Op op, ValueType t) { return Opcode{op, t, false}; }
inline Opcode trad(Op op, ValueType t) { return Opcode{op, t, true}; }
inline Opcode control(Op op) { return Opcode{op, std::nullopt, op >= Op::CVT}; }

// ---------------------------------------------------------------------------
// Operands
// ---------------------------------------------------------------------------

struct Reg {
  RegClass cls = RegClass::Int;
  std::uint8_t index = 0;
  friend bool operator==(const Reg&, const Reg&) = default;
  std::string str() const { return std::string(1, reg_prefix(cls)) + std::to_string(index); }
};

struct Imm {
  Value value;
  friend bool operator==(const Imm&, const Imm&) = default;
};

/// Word address: absolute `[a]`, bounds-checked indexed `[a+rK:len]`, or pointer `[xK]`.
struct Mem {
  enum class Mode : std::uint8_t { Absolute, Indexed, Indirect };
  Mode mode = Mode::Absolute;
  std::uint32_t address = 0;
  std::uint32_t length = 0;
  Reg reg{};

  static Mem absolute(std::uint32_t a) { return Mem{Mode::Absolute, a, 0, Reg{}}; }
  static Mem indexed(std::uint32_t a, Reg idx, std::uint32_t len) { return Mem{Mode::Indexed, a, len, idx}; }
  static Mem indirect(Reg ptr) { return Mem{Mode::Indirect, 0, 0, ptr}; }

  friend bool operator==(const Mem& a, const Mem& b) {
    if (a.mode != b.mode) return false;
    switch (a.mode) {
      case Mode::Absolute: return a.address == b.address;
      case Mode::Indexed: return a.address == b.address && a.length == b.length && a.reg == b.reg;
      case Mode::Indirect: return a.reg == b.reg;
    }
    return false;
  }

  std::string str() const {
    switch (mode) {
      case Mode::Absolute: return "[" + std::to_string(address) + "]";
      case Mode::Indexed:
        return "[" + std::to_string(address) + "+" + reg.str() + ":" + std::to_string(length) + "]";
      case Mode::Indirect: return "[" + reg.str() + "]";
    }
    return "[]";
  }
};

struct Handle {
  std::uint64_t id = 0;
  friend bool operator==(const Handle&, const Handle&) = default;
};

/// CONV configuration: 8 switches written MSB first. Bit 0 int->float,
/// bit 1 int->double, bit 2 float->double; bits 3-7 are reserved.
struct ConvMask {
  std::uint8_t bits = 0;

  static constexpr std::uint8_t kIntToFloat = 1u << 0;
  static constexpr std::uint8_t kIntToDouble = 1u << 1;
  static constexpr std::uint8_t kFloatToDouble = 1u << 2;
  static constexpr std::uint8_t kReserved = 0xF8;

  friend bool operator==(const ConvMask&, const ConvMask&) = default;

  static std::optional<std::uint8_t> bit_for(ValueType from, ValueType to) {
    if (from == ValueType::Int && to == ValueType::Float) return kIntToFloat;
    if (from == ValueType::Int && to == ValueType::Double) return kIntToDouble;
    if (from == ValueType::Float && to == ValueType::Double) return kFloatToDouble;
    return std::nullopt;
  }

  bool allows(ValueType from, ValueType to) const {
    auto b = bit_for(from, to);
    return b && (bits & *b);
  }
  bool reserved_set() const { return (bits & kReserved) != 0; }

  std::string str() const {
    std::string s(8, '0');
    for (int i = 0; i < 8; ++i)
      if (bits & (1u << i)) s[7 - i] = '1';
    return s;
  }

  static std::optional<ConvMask> parse(std::string_view s) {
    if (s.size() != 8) return std::nullopt;
    ConvMask m;
    for (int i = 0; i < 8; ++i) {
      char c = s[7 - i];
      if (c == '1') m.bits |= static_cast<std::uint8_t>(1u << i);
      else if (c != '0') return std::nullopt;
    }
    return m;
  }
};

struct VecLen {
  int count = 1;
  friend bool operator==(const VecLen&, const VecLen&) = default;
};

struct CondCode {
  Cond cond = Cond::Eq;
  friend bool operator==(const CondCode&, const CondCode&) = default;
};

struct LabelRef {
  std::string name;
  friend bool operator==(const LabelRef&, const LabelRef&) = default;
};

using Operand = std::variant<Reg, Imm, Mem, Handle, ConvMask, VecLen, CondCode, LabelRef>;

inline std::string operand_str(const Operand& op) {
  struct V {
    std::string operator()(const Reg& r) const { return r.str(); }
    std::string operator()(const Imm& i) const { return "#" + i.value.payload(); }
    std::string operator()(const Mem& m) const { return m.str(); }
    std::string operator()(const Handle& h) const { return "h" + std::to_string(h.id); }
    std::string operator()(const ConvMask& m) const { return m.str(); }
    std::string operator()(const VecLen& v) const { return std::to_string(v.count); }
    std::string operator()(const CondCode& c) const { return std::string(to_string(c.cond)); }
    std::string operator()(const LabelRef& l) const { return l.name; }
  };
  return std::visit(V{}, op);
}

// ---------------------------------------------------------------------------
// Instructions and programs
// ---------------------------------------------------------------------------

struct Instruction {
  Opcode opcode;
  std::vector<Operand> operands;
  std::optional<int> cluster;

  friend bool operator==(const Instruction&, const Instruction&) = default;

  std::string str() const {
    std::string s = opcode.mnemonic();
    for (std::size_t i = 0; i < operands.size(); ++i) {
      s += i == 0 ? " " : ", ";
      s += operand_str(operands[i]);
    }
    return s;
  }

  const Reg* reg(std::size_t i) const {
    return i < operands.size() ? std::get_if<Reg>(&operands[i]) : nullptr;
  }
  const Mem* mem() const {
    for (const auto& o : operands)
      if (auto m = std::get_if<Mem>(&o)) return m;
    return nullptr;
  }
  std::optional<ConvMask> conv_mask() const {
    if (!operands.empty())
      if (auto m = std::get_if<ConvMask>(&operands[0])) return *m;
    return std::nullopt;
  }

  /// Registers written by this instruction.
  std::vector<Reg> defs() const {
    switch (opcode.op) {
      case Op::ST: case Op::OBJR: case Op::BR: case Op::BNZ:
        return {};
      case Op::CONV:
        if (operands.size() == 3) return {std::get<Reg>(operands[1])};
        return {};
      default:
        if (auto r = reg(0); r && opcode.op != Op::VEN) return {*r};
        return {};
    }
  }

  /// Registers read by this instruction, including address registers.
  std::vector<Reg> uses() const {
    std::vector<Reg> out;
    std::size_t first = 1;
    switch (opcode.op) {
      case Op::ST: case Op::OBJR: case Op::BNZ: first = 0; break;
      case Op::CONV: first = 2; break;
      default: break;
    }
    for (std::size_t i = first; i < operands.size(); ++i) {
      if (auto r = std::get_if<Reg>(&operands[i])) out.push_back(*r);
      if (auto m = std::get_if<Mem>(&operands[i]); m && m->mode != Mem::Mode::Absolute) out.push_back(m->reg);
    }
    return out;
  }
};

struct Symbol {
  std::string name;
  bool global = true;
  std::uint32_t address = 0;
  std::vector<Value> init;

  friend bool operator==(const Symbol&, const Symbol&) = default;
  std::uint32_t size() const { return static_cast<std::uint32_t>(init.size()); }
};

struct Label {
  std::string name;
  std::size_t index = 0;
  friend bool operator==(const Label&, const Label&) = default;
};

struct Program {
  std::uint32_t memory_words = 0;
  std::vector<Symbol> symbols;
  std::vector<Instruction> code;
  std::vector<Label> labels;

  friend bool operator==(const Program&, const Program&) = default;

  std::optional<std::size_t> label_index(std::string_view name) const {
    for (const auto& l : labels)
      if (l.name == name) return l.index;
    return std::nullopt;
  }
};

// ---------------------------------------------------------------------------
// Operand shape and lane rules
// ---------------------------------------------------------------------------

/// Checks operand arity, kinds and lane rules of a single instruction. Cross-lane
/// sources of typed ALU ops are accepted here when they follow a conversion the
/// TCU implements; whether the TCU is configured for them is a group-level check.
inline std::optional<Diagnostic> check_shape(const Instruction& in) {
  const Opcode& oc = in.opcode;
  const auto& ops = in.operands;
  auto malformed = [&](const std::string& why) {
    return Diagnostic{ErrorCode::MalformedOperand, 0, 0, oc.mnemonic() + ": " + why};
  };
  auto lane = [&](const std::string& why) {
    return Diagnostic{ErrorCode::LaneMismatch, 0, 0, oc.mnemonic() + ": " + why};
  };
  auto is = [&](std::size_t i, auto tag) {
    using T = decltype(tag);
    return i < ops.size() && std::holds_alternative<T>(ops[i]);
  };
  auto arity = [&](std::size_t n) { return ops.size() == n; };
  const RegClass own = oc.type ? reg_class(*oc.type) : RegClass::Trad;

  auto check_mem = [&](const Mem& m) -> std::optional<Diagnostic> {
    if (m.mode == Mem::Mode::Indirect) {
      if (!oc.traditional) return malformed("pointer addressing requires the traditional lane");
      if (m.reg.cls != RegClass::Trad) return lane("pointer register must be an x register");
    }
    if (m.mode == Mem::Mode::Indexed) {
      if (m.reg.cls != RegClass::Int) return lane("index register must be an r register");
      if (m.length == 0) return malformed("indexed access needs a non-zero length");
    }
    return std::nullopt;
  };

  switch (oc.op) {
    case Op::LD:
    case Op::ST:
    case Op::LEA: {
      if (!arity(2) || !is(0, Reg{}) || !is(1, Mem{})) return malformed("expected register, memory");
      const Reg& r = std::get<Reg>(ops[0]);
      if (oc.op == Op::LEA) {
        if (r.cls != RegClass::Trad) return lane("address result must be an x register");
      } else if (r.cls != own) {
        return lane("register " + r.str() + " is not in the " + std::string(value_suffix(*oc.type)) + " lane");
      }
      return check_mem(std::get<Mem>(ops[1]));
    }
    case Op::MOV: {
      if (!arity(2) || !is(0, Reg{}) || !(is(1, Reg{}) || is(1, Imm{})))
        return malformed("expected register, register|immediate");
      if (std::get<Reg>(ops[0]).cls != own) return lane("destination not in suffix lane");
      if (auto r = std::get_if<Reg>(&ops[1]); r && r->cls != own) return lane("source not in suffix lane");
      if (auto i = std::get_if<Imm>(&ops[1]); i && i->value.type() != *oc.type)
        return malformed("immediate type differs from suffix");
      return std::nullopt;
    }
    case Op::ADD: case Op::SUB: case Op::MUL: case Op::DIV:
    case Op::CMPE: case Op::CMPEG: case Op::CMPEs: case Op::CMPS: case Op::CMP:
    case Op::AND: case Op::OR: case Op::XOR: case Op::NOR: case Op::XNOR:
    case Op::SRA: case Op::SRL: case Op::SLL: {
      const std::size_t n = oc.op == Op::CMP ? 4 : 3;
      if (!arity(n) || !is(0, Reg{}) || !is(1, Reg{}) || !is(2, Reg{}) || (n == 4 && !is(3, CondCode{})))
        return malformed(n == 4 ? "expected register, register, register, condition"
                                : "expected register, register, register");
      if (std::get<Reg>(ops[0]).cls != own) return lane("destination not in suffix lane");
      for (std::size_t i = 1; i < 3; ++i) {
        const Reg& r = std::get<Reg>(ops[i]);
        if (r.cls == own) continue;
        if (!oc.traditional && is_tcu_direction(class_type(r.cls), *oc.type)) continue;
        return lane("source " + r.str() + " is not in the " + std::string(value_suffix(*oc.type)) + " lane");
      }
      return std::nullopt;
    }
    case Op::VEN:
      if (!arity(1) || !is(0, VecLen{})) return malformed("expected vector length");
      if (auto n = std::get<VecLen>(ops[0]).count; n < 1 || n > 16) return malformed("vector length outside 1..16");
      return std::nullopt;
    case Op::VDS: case Op::PEN: case Op::PDS:
    case Op::FTEN: case Op::DBEN: case Op::CHEN: case Op::FTDS: case Op::DBDS: case Op::CHDS:
      if (!arity(0)) return malformed("takes no operands");
      return std::nullopt;
    case Op::CONV: {
      if (!(arity(1) || arity(3)) || !is(0, ConvMask{})) return malformed("expected mask [, register, register]");
      if (arity(3)) {
        if (!is(1, Reg{}) || !is(2, Reg{})) return malformed("expected mask, register, register");
        auto from = class_type(std::get<Reg>(ops[2]).cls);
        auto to = class_type(std::get<Reg>(ops[1]).cls);
        if (!is_tcu_direction(from, to)) return lane("conversion direction not supported by the TCU");
      }
      return std::nullopt;
    }
    case Op::OBJN:
      if (!arity(2) || !is(0, Reg{}) || !is(1, Reg{})) return malformed("expected register, register");
      if (std::get<Reg>(ops[0]).cls != RegClass::Int || std::get<Reg>(ops[1]).cls != RegClass::Int)
        return lane("object operands live in the int lane");
      return std::nullopt;
    case Op::OBJR:
      if (!arity(1) || !(is(0, Reg{}) || is(0, Handle{}))) return malformed("expected register or handle");
      if (auto r = std::get_if<Reg>(&ops[0]); r && r->cls != RegClass::Int)
        return lane("object handles live in the int lane");
      return std::nullopt;
    case Op::CVT:
      if (!arity(2) || !is(0, Reg{}) || !is(1, Reg{})) return malformed("expected register, register");
      return std::nullopt;
    case Op::BR:
      if (!arity(1) || !is(0, LabelRef{})) return malformed("expected label");
      return std::nullopt;
    case Op::BNZ:
      if (!arity(3) || !is(0, Reg{}) || !is(1, LabelRef{}) || !is(2, LabelRef{}))
        return malformed("expected register, label, label");
      return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace typeline
