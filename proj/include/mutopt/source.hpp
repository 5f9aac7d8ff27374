#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace mutopt {

enum class LanguageTag { mini, c_like };

inline std::string_view to_string(LanguageTag tag) {
  return tag == LanguageTag::mini ? "mini" : "c-like";
}

enum class TokenKind {
  Relational,
  ShortcutAssign,
  Arithmetic,
  Increment,
  Identifier,
  Literal,
  StringLiteral,
  Comment,
  Other,
};

inline std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::Relational: return "Relational";
    case TokenKind::ShortcutAssign: return "ShortcutAssign";
    case TokenKind::Arithmetic: return "Arithmetic";
    case TokenKind::Increment: return "Increment";
    case TokenKind::Identifier: return "Identifier";
    case TokenKind::Literal: return "Literal";
    case TokenKind::StringLiteral: return "StringLiteral";
    case TokenKind::Comment: return "Comment";
    case TokenKind::Other: return "Other";
  }
  return "?";
}

// Half-open byte range [begin, end) into SourceUnit::text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const Span&, const Span&) = default;
};

struct Token {
  TokenKind kind = TokenKind::Other;
  std::string lexeme;
  Span span;
  int line = 1;
  int col = 1;
};

// Raised when a file cannot be lexed safely (unterminated literal or
// comment, invalid UTF-8).
class MalformedSource : public std::runtime_error {
 public:
  MalformedSource(const std::string& what, int line, int col)
      : std::runtime_error(what + " at " + std::to_string(line) + ":" +
                           std::to_string(col)),
        line_(line),
        col_(col) {}

  int line() const { return line_; }
  int col() const { return col_; }

 private:
  int line_;
  int col_;
};

struct SourceUnit {
  std::string text;
  LanguageTag language = LanguageTag::mini;
  std::vector<Token> tokens;

  // Rebuilds the text from token lexemes and the whitespace gaps between
  // them. Equal to `text` for every unit produced by tokenize().
  std::string reassemble() const {
    std::string out;
    out.reserve(text.size());
    std::size_t cursor = 0;
    for (const auto& tok : tokens) {
      out.append(text, cursor, tok.span.begin - cursor);
      out += tok.lexeme;
      cursor = tok.span.end;
    }
    out.append(text, cursor, std::string::npos);
    return out;
  }

  int line_count() const {
    if (text.empty()) return 0;
    int n = static_cast<int>(std::count(text.begin(), text.end(), '\n'));
    return text.back() == '\n' ? n : n + 1;
  }
};

namespace detail {

inline bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

// Non-ASCII bytes are accepted as identifier characters.
inline bool is_ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' ||
         c == '$' || c >= 0x80;
}

inline bool is_ident_char(unsigned char c) {
  return is_ident_start(c) || is_digit(c);
}

// Returns the byte offset of the first invalid sequence, or npos.
inline std::size_t find_invalid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return i;
    }
    if (i + len > s.size()) return i;
    for (std::size_t k = 1; k < len; ++k) {
      auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) return i;
      cp = (cp << 6) | (cc & 0x3F);
    }
    static constexpr std::array<std::uint32_t, 5> min_cp{0, 0, 0x80, 0x800,
                                                         0x10000};
    if (cp < min_cp[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      return i;
    i += len;
  }
  return std::string_view::npos;
}

struct OperatorSpelling {
  std::string_view text;
  TokenKind kind;
};

// Longest spellings first so that a linear scan implements maximal munch.
inline constexpr std::array<OperatorSpelling, 30> kOperators{{
    {"<<=", TokenKind::Other},          {">>=", TokenKind::Other},
    {"...", TokenKind::Other},          {"<=", TokenKind::Relational},
    {">=", TokenKind::Relational},      {"==", TokenKind::Relational},
    {"!=", TokenKind::Relational},      {"+=", TokenKind::ShortcutAssign},
    {"-=", TokenKind::ShortcutAssign},  {"*=", TokenKind::ShortcutAssign},
    {"/=", TokenKind::ShortcutAssign},  {"%=", TokenKind::ShortcutAssign},
    {"++", TokenKind::Increment},       {"--", TokenKind::Increment},
    {"<<", TokenKind::Other},           {">>", TokenKind::Other},
    {"&&", TokenKind::Other},           {"||", TokenKind::Other},
    {"&=", TokenKind::Other},           {"|=", TokenKind::Other},
    {"^=", TokenKind::Other},           {"->", TokenKind::Other},
    {"::", TokenKind::Other},           {"<", TokenKind::Relational},
    {">", TokenKind::Relational},       {"+", TokenKind::Arithmetic},
    {"-", TokenKind::Arithmetic},       {"*", TokenKind::Arithmetic},
    {"/", TokenKind::Arithmetic},       {"%", TokenKind::Arithmetic},
}};

// Identifiers after which a following +,-,* is a prefix operator or a
// pointer declarator, not a binary operator ("return -1", "char *p").
inline bool is_prefix_keyword(std::string_view word) {
  static constexpr std::array<std::string_view, 27> kWords{
      "return", "case",     "sizeof",  "throw",     "new",      "delete",
      "else",   "do",       "goto",    "co_return", "co_yield", "yield",
      "typeof", "await",    "char",    "short",     "int",      "long",
      "float",  "double",   "void",    "signed",    "unsigned", "const",
      "volatile", "auto",   "bool"};
  return std::find(kWords.begin(), kWords.end(), word) != kWords.end();
}

inline bool is_closing_bracket(const Token& tok) {
  return tok.kind == TokenKind::Other &&
         (tok.lexeme == ")" || tok.lexeme == "]");
}

class Lexer {
 public:
  Lexer(std::string_view text, LanguageTag language)
      : text_(text), language_(language) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    bool line_start = true;
    while (pos_ < text_.size()) {
      auto c = static_cast<unsigned char>(text_[pos_]);
      if (is_space(c)) {
        if (c == '\n') line_start = true;
        advance(1);
        continue;
      }
      std::size_t begin = pos_;
      int line = line_, col = col_;
      TokenKind kind = lex_one(line_start);
      line_start = false;
      out.push_back(Token{kind, std::string(text_.substr(begin, pos_ - begin)),
                          Span{begin, pos_}, line, col});
    }
    return out;
  }

 private:
  TokenKind lex_one(bool line_start) {
    auto c = static_cast<unsigned char>(text_[pos_]);
    auto next = peek(1);

    if (c == '/' && next == '/') {
      while (pos_ < text_.size() && text_[pos_] != '\n') advance(1);
      return TokenKind::Comment;
    }
    if (c == '/' && next == '*') {
      int line = line_, col = col_;
      advance(2);
      while (true) {
        if (pos_ >= text_.size())
          throw MalformedSource("unterminated block comment", line, col);
        if (text_[pos_] == '*' && peek(1) == '/') {
          advance(2);
          return TokenKind::Comment;
        }
        advance(1);
      }
    }
    if (c == '#' && line_start && language_ == LanguageTag::c_like) {
      // Preprocessor directive, including backslash continuations.
      while (pos_ < text_.size() && text_[pos_] != '\n') {
        if (text_[pos_] == '\\' && peek(1) == '\n')
          advance(2);
        else
          advance(1);
      }
      return TokenKind::Other;
    }
    if (c == '"' || c == '\'') {
      lex_quoted(static_cast<char>(c));
      return TokenKind::StringLiteral;
    }
    if (is_digit(c) || (c == '.' && is_digit(peek(1)))) {
      lex_number();
      return TokenKind::Literal;
    }
    if (is_ident_start(c)) {
      while (pos_ < text_.size() &&
             is_ident_char(static_cast<unsigned char>(text_[pos_])))
        advance(1);
      return TokenKind::Identifier;
    }
    for (const auto& op : kOperators) {
      if (text_.substr(pos_, op.text.size()) == op.text) {
        advance(op.text.size());
        return op.kind;
      }
    }
    advance(1);
    return TokenKind::Other;
  }

  void lex_quoted(char quote) {
    int line = line_, col = col_;
    advance(1);
    while (true) {
      if (pos_ >= text_.size() || text_[pos_] == '\n')
        throw MalformedSource("unterminated literal", line, col);
      if (text_[pos_] == '\\') {
        advance(pos_ + 1 < text_.size() ? 2 : 1);
        continue;
      }
      if (text_[pos_] == quote) {
        advance(1);
        return;
      }
      advance(1);
    }
  }

  // pp-number: digits, letters, dots, and a sign directly after an exponent.
  void lex_number() {
    while (pos_ < text_.size()) {
      auto c = static_cast<unsigned char>(text_[pos_]);
      if ((c == '+' || c == '-') && pos_ > 0) {
        char prev = text_[pos_ - 1];
        if (prev == 'e' || prev == 'E' || prev == 'p' || prev == 'P') {
          advance(1);
          continue;
        }
        return;
      }
      if (is_ident_char(c) || c == '.' || c == '\'') {
        if (c == '\'' && !is_ident_char(peek(1))) return;
        advance(1);
        continue;
      }
      return;
    }
  }

  unsigned char peek(std::size_t ahead) const {
    return pos_ + ahead < text_.size()
               ? static_cast<unsigned char>(text_[pos_ + ahead])
               : 0;
  }

  void advance(std::size_t n) {
    for (std::size_t k = 0; k < n && pos_ < text_.size(); ++k) {
      if (text_[pos_] == '\n') {
        ++line_;
        col_ = 1;
      } else {
        ++col_;
      }
      ++pos_;
    }
  }

  std::string_view text_;
  LanguageTag language_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

}  // namespace detail

// True when the +,-,*,/,% at `index` sits in binary-operator position: the
// previous non-comment token is an operand (identifier other than a prefix
// keyword, literal, or closing bracket).
inline bool classify_binary_context(const std::vector<Token>& tokens,
                                    std::size_t index) {
  if (index >= tokens.size()) return false;
  for (std::size_t k = index; k-- > 0;) {
    const Token& prev = tokens[k];
    if (prev.kind == TokenKind::Comment) continue;
    switch (prev.kind) {
      case TokenKind::Identifier:
        return !detail::is_prefix_keyword(prev.lexeme);
      case TokenKind::Literal:
        return true;
      default:
        return detail::is_closing_bracket(prev);
    }
  }
  return false;
}

inline SourceUnit tokenize(std::string text, LanguageTag language) {
  if (auto bad = detail::find_invalid_utf8(text); bad != std::string::npos) {
    int line = 1 + static_cast<int>(std::count(text.begin(),
                                               text.begin() + bad, '\n'));
    throw MalformedSource("invalid UTF-8", line, 0);
  }
  SourceUnit unit;
  unit.language = language;
  unit.tokens = detail::Lexer(text, language).run();
  unit.text = std::move(text);
  // Unary occurrences of + - * / % are demoted; only binary ones are
  // mutation sites.
  for (std::size_t i = 0; i < unit.tokens.size(); ++i) {
    Token& tok = unit.tokens[i];
    if (tok.kind == TokenKind::Arithmetic &&
        !classify_binary_context(unit.tokens, i))
      tok.kind = TokenKind::Other;
  }
  return unit;
}

}  // namespace mutopt
