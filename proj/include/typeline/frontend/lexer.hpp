#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "typeline/error.hpp"

namespace typeline::minic {

enum class Tok {
  Ident, IntLit, LongLit, FloatLit, DoubleLit, CharLit,
  // keywords
  KwInt, KwFloat, KwDouble, KwLong, KwChar, KwVoid, KwStruct, KwEnum, KwTypedef,
  KwStatic, KwConst, KwUnsigned, KwIf, KwElse, KwFor, KwWhile, KwReturn, KwNew, KwDelete,
  // punctuation
  LParen, RParen, LBrace, RBrace, LBracket, RBracket, Semi, Comma, Dot,
  Assign, PlusAssign, MinusAssign, StarAssign, SlashAssign, PlusPlus, MinusMinus,
  Plus, Minus, Star, Slash, Amp, Pipe, Caret, Tilde, Bang, AndAnd, OrOr,
  Lt, Le, Gt, Ge, EqEq, NotEq, Shl, Shr,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int column = 1;
};

namespace detail {

inline const std::vector<std::pair<std::string_view, Tok>>& keywords() {
  static const std::vector<std::pair<std::string_view, Tok>> k = {
      {"int", Tok::KwInt},         {"float", Tok::KwFloat},   {"double", Tok::KwDouble},
      {"long", Tok::KwLong},       {"char", Tok::KwChar},     {"void", Tok::KwVoid},
      {"struct", Tok::KwStruct},   {"enum", Tok::KwEnum},     {"typedef", Tok::KwTypedef},
      {"static", Tok::KwStatic},   {"const", Tok::KwConst},   {"unsigned", Tok::KwUnsigned},
      {"if", Tok::KwIf},           {"else", Tok::KwElse},     {"for", Tok::KwFor},
      {"while", Tok::KwWhile},     {"return", Tok::KwReturn}, {"new", Tok::KwNew},
      {"delete", Tok::KwDelete},
  };
  return k;
}

// Recognised C/C++ words the grammar deliberately leaves out.
inline bool is_unsupported_word(std::string_view w) {
  for (std::string_view u : {"goto", "switch", "case", "default", "do", "break", "continue", "sizeof", "class",
                             "template", "union", "signed", "short", "namespace", "operator", "virtual", "auto",
                             "register", "volatile", "extern", "inline", "bool", "true", "false", "this"})
    if (w == u) return true;
  return false;
}

}  // namespace detail

/// Splits MiniC source into tokens. Literal suffixes: `3L` long, `2.5f` float.
inline std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1, col = 1;

  auto fail = [&](ErrorCode code, const std::string& msg) {
    throw Error({Diagnostic{code, line, col, msg}});
  };
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };

  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (src.substr(i, 2) == "//") {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (src.substr(i, 2) == "/*") {
      auto end = src.find("*/", i + 2);
      if (end == std::string_view::npos) fail(ErrorCode::SyntaxError, "unterminated comment");
      advance(end + 2 - i);
      continue;
    }

    Token t;
    t.line = line;
    t.column = col;

    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) ++j;
      t.text = std::string(src.substr(i, j - i));
      t.kind = Tok::Ident;
      for (auto [w, k] : detail::keywords())
        if (w == t.text) t.kind = k;
      if (t.kind == Tok::Ident && detail::is_unsupported_word(t.text))
        fail(ErrorCode::UnsupportedConstruct, "'" + t.text + "' is not part of MiniC");
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }

    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      bool fractional = false;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && src[j] == '.') {
        fractional = true;
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          fractional = true;
          j = k;
          while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
        }
      }
      t.text = std::string(src.substr(i, j - i));
      t.kind = fractional ? Tok::DoubleLit : Tok::IntLit;
      if (j < src.size() && (src[j] == 'f' || src[j] == 'F') && fractional) {
        t.kind = Tok::FloatLit;
        ++j;
      } else if (j < src.size() && (src[j] == 'L' || src[j] == 'l') && !fractional) {
        t.kind = Tok::LongLit;
        ++j;
      }
      if (j < src.size() && (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        fail(ErrorCode::SyntaxError, "malformed number");
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }

    if (c == '\'') {
      std::size_t j = i + 1;
      int v = 0;
      if (j < src.size() && src[j] == '\\') {
        if (j + 1 >= src.size()) fail(ErrorCode::SyntaxError, "unterminated character literal");
        switch (src[j + 1]) {
          case 'n': v = '\n'; break;
          case 't': v = '\t'; break;
          case '0': v = 0; break;
          case '\\': v = '\\'; break;
          case '\'': v = '\''; break;
          default: fail(ErrorCode::SyntaxError, "unknown escape");
        }
        j += 2;
      } else if (j < src.size()) {
        v = static_cast<unsigned char>(src[j]);
        ++j;
      }
      if (j >= src.size() || src[j] != '\'') fail(ErrorCode::SyntaxError, "unterminated character literal");
      t.kind = Tok::CharLit;
      t.text = std::to_string(v);
      advance(j + 1 - i);
      out.push_back(std::move(t));
      continue;
    }

    static const std::vector<std::pair<std::string_view, Tok>> puncts = {
        {"<<", Tok::Shl},        {">>", Tok::Shr},       {"<=", Tok::Le},          {">=", Tok::Ge},
        {"==", Tok::EqEq},       {"!=", Tok::NotEq},     {"&&", Tok::AndAnd},      {"||", Tok::OrOr},
        {"++", Tok::PlusPlus},   {"--", Tok::MinusMinus}, {"+=", Tok::PlusAssign}, {"-=", Tok::MinusAssign},
        {"*=", Tok::StarAssign}, {"/=", Tok::SlashAssign}, {"(", Tok::LParen},     {")", Tok::RParen},
        {"{", Tok::LBrace},      {"}", Tok::RBrace},     {"[", Tok::LBracket},     {"]", Tok::RBracket},
        {";", Tok::Semi},        {",", Tok::Comma},      {".", Tok::Dot},          {"=", Tok::Assign},
        {"+", Tok::Plus},        {"-", Tok::Minus},      {"*", Tok::Star},         {"/", Tok::Slash},
        {"&", Tok::Amp},         {"|", Tok::Pipe},       {"^", Tok::Caret},        {"~", Tok::Tilde},
        {"!", Tok::Bang},        {"<", Tok::Lt},         {">", Tok::Gt},
    };
    // operators that exist in C but not in MiniC
    for (std::string_view u : {"->", "%=", "&=", "|=", "^=", "<<=", ">>=", "::"})
      if (src.substr(i, u.size()) == u) fail(ErrorCode::UnsupportedConstruct, "operator '" + std::string(u) + "' is not part of MiniC");
    if (c == '%' || c == '?' || c == '#' || c == ':')
      fail(ErrorCode::UnsupportedConstruct, std::string("'") + c + "' is not part of MiniC");

    bool matched = false;
    for (auto [p, k] : puncts) {
      if (src.substr(i, p.size()) == p) {
        t.kind = k;
        t.text = std::string(p);
        advance(p.size());
        out.push_back(std::move(t));
        matched = true;
        break;
      }
    }
    if (!matched) fail(ErrorCode::SyntaxError, std::string("unexpected character '") + c + "'");
  }
  Token end;
  end.kind = Tok::End;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

}  // namespace typeline::minic
