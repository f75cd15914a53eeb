#pragma once

// Textual `.tla` assembly.
//
//   .mem 16                       ; total memory words
//   .global a 0 = in:3            ; name, base address, typed initial words
//   .local  tmp 1 = ft:0
//   @cluster 0                    ; tag applied until @end
//   VEN 4
//   LD.in r0, [0]
//   VDS
//   @end
//   L1:
//   T.BNZ r3, L1, L2
//
// One instruction per line, `;` starts a comment.

#include <cctype>
#include <charconv>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "typeline/isa.hpp"

namespace typeline {

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T v{};
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<Reg> parse_reg(std::string_view s) {
  if (s.size() < 2) return std::nullopt;
  RegClass cls;
  switch (s[0]) {
    case 'r': cls = RegClass::Int; break;
    case 'f': cls = RegClass::Float; break;
    case 'd': cls = RegClass::Double; break;
    case 'c': cls = RegClass::Char; break;
    case 'x': cls = RegClass::Trad; break;
    default: return std::nullopt;
  }
  auto idx = parse_number<unsigned>(s.substr(1));
  if (!idx || *idx >= kRegistersPerFile) return std::nullopt;
  return Reg{cls, static_cast<std::uint8_t>(*idx)};
}

inline std::optional<Mem> parse_mem(std::string_view s) {
  if (s.size() < 3 || s.front() != '[' || s.back() != ']') return std::nullopt;
  s = trim(s.substr(1, s.size() - 2));
  if (auto r = parse_reg(s)) return Mem::indirect(*r);
  auto plus = s.find('+');
  if (plus == std::string_view::npos) {
    auto a = parse_number<std::uint32_t>(s);
    if (!a) return std::nullopt;
    return Mem::absolute(*a);
  }
  auto colon = s.find(':', plus);
  if (colon == std::string_view::npos) return std::nullopt;
  auto a = parse_number<std::uint32_t>(trim(s.substr(0, plus)));
  auto r = parse_reg(trim(s.substr(plus + 1, colon - plus - 1)));
  auto n = parse_number<std::uint32_t>(trim(s.substr(colon + 1)));
  if (!a || !r || !n) return std::nullopt;
  return Mem::indexed(*a, *r, *n);
}

inline bool is_identifier(std::string_view s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  for (char c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '#')) return false;
  return true;
}

/// Splits on commas that are not inside brackets.
inline std::vector<std::string_view> split_operands(std::string_view s) {
  std::vector<std::string_view> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '[') ++depth;
    if (s[i] == ']') --depth;
    if (s[i] == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  auto last = trim(s.substr(start));
  if (!last.empty() || !out.empty()) out.push_back(last);
  return out;
}

/// Operand kinds accepted at a position, keyed by opcode.
inline std::optional<Operand> parse_operand(const Opcode& oc, std::size_t pos, std::string_view tok) {
  if (oc.op == Op::BR || (oc.op == Op::BNZ && pos > 0)) {
    if (is_identifier(tok)) return LabelRef{std::string(tok)};
    return std::nullopt;
  }
  if (oc.op == Op::VEN) {
    if (auto n = parse_number<int>(tok)) return VecLen{*n};
    return std::nullopt;
  }
  if (oc.op == Op::CONV && pos == 0) {
    if (auto m = ConvMask::parse(tok)) return *m;
    return std::nullopt;
  }
  if (oc.op == Op::CMP && pos == 3) {
    if (auto c = cond_from_string(tok)) return CondCode{*c};
    return std::nullopt;
  }
  if (!tok.empty() && tok.front() == '#') {
    if (!oc.type) return std::nullopt;
    if (auto v = Value::parse_payload(*oc.type, tok.substr(1))) return Imm{*v};
    return std::nullopt;
  }
  if (!tok.empty() && tok.front() == '[') {
    if (auto m = parse_mem(tok)) return *m;
    return std::nullopt;
  }
  if (oc.op == Op::OBJR && tok.size() > 1 && tok[0] == 'h') {
    if (auto id = parse_number<std::uint64_t>(tok.substr(1))) return Handle{*id};
    return std::nullopt;
  }
  if (auto r = parse_reg(tok)) return *r;
  return std::nullopt;
}

}  // namespace detail

/// Parses `.tla` text. Collects every line error before throwing.
inline Program parse_assembly(std::string_view text) {
  Program prog;
  std::vector<Diagnostic> errors;
  std::optional<int> tag;
  int line_no = 0;
  std::size_t pos = 0;

  auto fail = [&](ErrorCode code, const std::string& msg) { errors.push_back(Diagnostic{code, line_no, 1, msg}); };

  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto c = line.find(';'); c != std::string_view::npos) line = line.substr(0, c);
    line = detail::trim(line);
    if (line.empty()) continue;

    // Labels may share a line with an instruction.
    while (true) {
      auto colon = line.find(':');
      auto space = line.find_first_of(" \t[");
      if (colon == std::string_view::npos || (space != std::string_view::npos && space < colon)) break;
      auto name = line.substr(0, colon);
      if (!detail::is_identifier(name)) break;
      prog.labels.push_back(Label{std::string(name), prog.code.size()});
      line = detail::trim(line.substr(colon + 1));
    }
    if (line.empty()) continue;

    if (line.front() == '@') {
      std::istringstream in{std::string(line)};
      std::string word;
      in >> word;
      if (word == "@cluster") {
        int n = -1;
        if (!(in >> n) || n < 0) fail(ErrorCode::SyntaxError, "@cluster expects a non-negative id");
        else tag = n;
      } else if (word == "@end") {
        tag.reset();
      } else {
        fail(ErrorCode::SyntaxError, "unknown directive " + word);
      }
      continue;
    }

    if (line.front() == '.') {
      std::istringstream in{std::string(line)};
      std::string word;
      in >> word;
      if (word == ".mem") {
        std::uint32_t n = 0;
        if (!(in >> n)) fail(ErrorCode::SyntaxError, ".mem expects a word count");
        prog.memory_words = n;
      } else if (word == ".global" || word == ".local") {
        Symbol sym;
        sym.global = word == ".global";
        std::string eq;
        if (!(in >> sym.name >> sym.address >> eq) || eq != "=") {
          fail(ErrorCode::SyntaxError, word + " expects: name address = values");
          continue;
        }
        std::string tok;
        bool ok = true;
        while (in >> tok) {
          auto v = Value::parse(tok);
          if (!v) {
            ok = false;
            fail(ErrorCode::MalformedOperand, "bad initial value " + tok);
            break;
          }
          sym.init.push_back(*v);
        }
        if (ok) prog.symbols.push_back(std::move(sym));
      } else {
        fail(ErrorCode::SyntaxError, "unknown directive " + word);
      }
      continue;
    }

    auto space = line.find_first_of(" \t");
    std::string_view mnemonic = line.substr(0, space);
    std::string_view rest = space == std::string_view::npos ? std::string_view{} : detail::trim(line.substr(space));
    auto oc = lookup_opcode(mnemonic);
    if (!oc) {
      fail(ErrorCode::UnknownOpcode, "unknown opcode " + std::string(mnemonic));
      continue;
    }
    Instruction ins{*oc, {}, tag};
    bool ok = true;
    auto toks = detail::split_operands(rest);
    for (std::size_t i = 0; i < toks.size(); ++i) {
      auto operand = detail::parse_operand(*oc, i, toks[i]);
      if (!operand) {
        fail(ErrorCode::MalformedOperand, oc->mnemonic() + ": bad operand '" + std::string(toks[i]) + "'");
        ok = false;
        break;
      }
      ins.operands.push_back(std::move(*operand));
    }
    if (!ok) continue;
    if (auto d = check_shape(ins)) {
      d->line = line_no;
      d->column = 1;
      errors.push_back(*d);
      continue;
    }
    prog.code.push_back(std::move(ins));
  }
  if (!errors.empty()) throw Error(std::move(errors));
  return prog;
}

inline Instruction parse_instruction(std::string_view text) {
  Program p = parse_assembly(text);
  if (p.code.size() != 1) throw Error(ErrorCode::SyntaxError, "expected exactly one instruction");
  return p.code.front();
}

inline std::string format_assembly(const Program& prog) {
  std::string out;
  if (prog.memory_words > 0 || !prog.symbols.empty()) out += ".mem " + std::to_string(prog.memory_words) + "\n";
  for (const auto& s : prog.symbols) {
    out += s.global ? ".global " : ".local ";
    out += s.name + " " + std::to_string(s.address) + " =";
    for (const auto& v : s.init) out += " " + v.str();
    out += "\n";
  }
  std::vector<Label> labels = prog.labels;
  std::stable_sort(labels.begin(), labels.end(), [](const Label& a, const Label& b) { return a.index < b.index; });
  std::size_t li = 0;
  std::optional<int> tag;
  for (std::size_t i = 0; i < prog.code.size(); ++i) {
    const Instruction& ins = prog.code[i];
    if (tag && ins.cluster != tag) {
      out += "@end\n";
      tag.reset();
    }
    for (; li < labels.size() && labels[li].index == i; ++li) out += labels[li].name + ":\n";
    if (ins.cluster && ins.cluster != tag) {
      out += "@cluster " + std::to_string(*ins.cluster) + "\n";
      tag = ins.cluster;
    }
    out += ins.str() + "\n";
  }
  if (tag) out += "@end\n";
  for (; li < labels.size(); ++li) out += labels[li].name + ":\n";
  return out;
}

}  // namespace typeline
