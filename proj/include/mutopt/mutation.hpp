#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mutopt/source.hpp"

namespace mutopt {

enum class OperatorKind { ROR, ASR, AOR };

inline std::string_view to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::ROR: return "ROR";
    case OperatorKind::ASR: return "ASR";
    case OperatorKind::AOR: return "AOR";
  }
  return "?";
}

inline std::optional<OperatorKind> parse_operator_kind(std::string_view name) {
  std::string upper;
  for (char c : name)
    upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (upper == "ROR") return OperatorKind::ROR;
  if (upper == "ASR") return OperatorKind::ASR;
  if (upper == "AOR") return OperatorKind::AOR;
  return std::nullopt;
}

// A lexical replacement rule. The domain order is also the emission order of
// replacement lexemes.
struct MutationOperator {
  OperatorKind kind;
  TokenKind site_kind;
  std::vector<std::string> domain;

  bool applies_to(const Token& tok) const {
    return tok.kind == site_kind &&
           std::find(domain.begin(), domain.end(), tok.lexeme) != domain.end();
  }

  std::vector<std::string> codomain(std::string_view lexeme) const {
    std::vector<std::string> out;
    for (const auto& d : domain)
      if (d != lexeme) out.push_back(d);
    return out;
  }
};

inline MutationOperator relational_operator_replacement() {
  return {OperatorKind::ROR, TokenKind::Relational,
          {"<", "<=", ">", ">=", "==", "!="}};
}

inline MutationOperator shortcut_assignment_replacement() {
  return {OperatorKind::ASR, TokenKind::ShortcutAssign,
          {"+=", "-=", "*=", "/=", "%="}};
}

inline MutationOperator arithmetic_operator_replacement() {
  return {OperatorKind::AOR, TokenKind::Arithmetic, {"+", "-", "*", "/", "%"}};
}

inline MutationOperator make_operator(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::ROR: return relational_operator_replacement();
    case OperatorKind::ASR: return shortcut_assignment_replacement();
    case OperatorKind::AOR: return arithmetic_operator_replacement();
  }
  throw std::logic_error("unknown operator kind");
}

// Registry of the shipped operators, keyed by lower-case name.
inline const std::map<std::string, MutationOperator>& operator_registry() {
  static const std::map<std::string, MutationOperator> registry{
      {"ror", relational_operator_replacement()},
      {"asr", shortcut_assignment_replacement()},
      {"aor", arithmetic_operator_replacement()},
  };
  return registry;
}

// Parses a comma-separated list such as "ror,asr,aor", preserving order and
// duplicates.
inline std::vector<MutationOperator> parse_operator_list(std::string_view csv) {
  std::vector<MutationOperator> ops;
  std::size_t start = 0;
  while (start <= csv.size()) {
    auto comma = csv.find(',', start);
    auto item = csv.substr(start, comma == std::string_view::npos
                                      ? std::string_view::npos
                                      : comma - start);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.front())))
      item.remove_prefix(1);
    while (!item.empty() && std::isspace(static_cast<unsigned char>(item.back())))
      item.remove_suffix(1);
    if (!item.empty()) {
      auto kind = parse_operator_kind(item);
      if (!kind)
        throw std::invalid_argument("unknown mutation operator '" +
                                    std::string(item) + "'");
      ops.push_back(make_operator(*kind));
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return ops;
}

struct LineRange {
  int first = 1;
  int last = 1;

  bool contains(int line) const { return line >= first && line <= last; }
  friend bool operator==(const LineRange&, const LineRange&) = default;
};

struct MutationSite {
  int line = 1;
  int col = 1;
  Span span;
};

struct Mutant {
  std::string id;
  OperatorKind op = OperatorKind::ROR;
  MutationSite site;
  std::string original;
  std::string replacement;
  std::string mutated_text;

  // Span of the replacement lexeme inside mutated_text.
  Span mutated_span() const {
    return {site.span.begin, site.span.begin + replacement.size()};
  }
};

namespace detail {

inline std::string splice(std::string_view text, Span span,
                          std::string_view replacement) {
  std::string out;
  out.reserve(text.size() + replacement.size());
  out.append(text.substr(0, span.begin));
  out.append(replacement);
  out.append(text.substr(span.end));
  return out;
}

// The replacement must re-lex as one token of the same kind at the same
// offset; "a+*p" -> "a/*p" opens a comment and is dropped.
inline bool relexes_cleanly(const SourceUnit& source, const Token& site,
                            std::string_view replacement,
                            const std::string& mutated) {
  try {
    auto unit = tokenize(mutated, source.language);
    auto it = std::find_if(unit.tokens.begin(), unit.tokens.end(),
                           [&](const Token& t) {
                             return t.span.begin == site.span.begin;
                           });
    return it != unit.tokens.end() && it->lexeme == replacement &&
           it->kind == site.kind &&
           unit.tokens.size() == source.tokens.size();
  } catch (const MalformedSource&) {
    return false;
  }
}

class MutantNumbering {
 public:
  std::string next(OperatorKind kind) {
    return std::string(to_string(kind)) + "_" +
           std::to_string(++counters_[kind]);
  }

 private:
  std::map<OperatorKind, int> counters_;
};

inline void append_mutants(const MutationOperator& op, const SourceUnit& source,
                           const std::optional<LineRange>& lines,
                           MutantNumbering& numbering,
                           std::vector<Mutant>& out) {
  for (const auto& tok : source.tokens) {
    if (!op.applies_to(tok)) continue;
    const bool in_range = !lines || lines->contains(tok.line);
    for (const auto& replacement : op.codomain(tok.lexeme)) {
      auto mutated = splice(source.text, tok.span, replacement);
      if (!relexes_cleanly(source, tok, replacement, mutated)) continue;
      // Sites outside the range still consume ids so that ids do not depend
      // on the range.
      auto id = numbering.next(op.kind);
      if (!in_range) continue;
      out.push_back(Mutant{std::move(id), op.kind,
                           MutationSite{tok.line, tok.col, tok.span},
                           tok.lexeme, replacement, std::move(mutated)});
    }
  }
}

}  // namespace detail

// All first-order mutants of `source` under one operator, in ascending site
// order and then domain order; ids are "<KIND>_<n>" counted from 1 over the
// whole file, also when `lines` restricts the sites.
inline std::vector<Mutant> mutate(const MutationOperator& op,
                                  const SourceUnit& source,
                                  const std::optional<LineRange>& lines = {}) {
  std::vector<Mutant> out;
  detail::MutantNumbering numbering;
  detail::append_mutants(op, source, lines, numbering, out);
  return out;
}

// Concatenation of mutate() over `ops` in the given order. Numbering per kind
// continues across repeated operators so ids stay unique.
inline std::vector<Mutant> apply_all(const std::vector<MutationOperator>& ops,
                                     const SourceUnit& source,
                                     const std::optional<LineRange>& lines = {}) {
  std::vector<Mutant> out;
  detail::MutantNumbering numbering;
  for (const auto& op : ops)
    detail::append_mutants(op, source, lines, numbering, out);
  return out;
}

// Undo a mutant: put the original lexeme back at the mutated site.
inline std::string revert(const Mutant& m) {
  return detail::splice(m.mutated_text, m.mutated_span(), m.original);
}

// "<stem>.<id>.<ext>", e.g. b2tob10.ASR_3.mini
inline std::string mutant_file_name(const std::filesystem::path& source_path,
                                    std::string_view id) {
  auto ext = source_path.extension().string();
  return source_path.stem().string() + "." + std::string(id) + ext;
}

}  // namespace mutopt
