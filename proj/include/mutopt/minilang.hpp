#pragma once

// MiniImp: a small deterministic imperative language with 64-bit wrapping
// integers, a read-only input array `in[]` of length `in_len`, and print().
// Programs are evaluated by a tree-walking interpreter that counts steps:
//
//   steps = statements executed + operator evaluations + array reads
//
// A `while` is counted once per condition test, a shortcut assignment counts
// as one statement plus one operator evaluation, blocks are free.

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mutopt/source.hpp"

namespace mutopt {

class CompileError : public std::runtime_error {
 public:
  CompileError(const std::string& message, int line, int col)
      : std::runtime_error(std::to_string(line) + ":" + std::to_string(col) +
                           ": " + message),
        message_(message),
        line_(line),
        col_(col) {}

  const std::string& message() const { return message_; }
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  std::string message_;
  int line_;
  int col_;
};

class BudgetExceeded : public std::runtime_error {
 public:
  BudgetExceeded(std::uint64_t budget, std::uint64_t spent)
      : std::runtime_error("step budget of " + std::to_string(budget) +
                           " exceeded"),
        budget_(budget),
        spent_(spent) {}

  std::uint64_t budget() const { return budget_; }
  // Steps counted when the interpreter stopped.
  std::uint64_t spent() const { return spent_; }

 private:
  std::uint64_t budget_;
  std::uint64_t spent_;
};

class MiniRuntimeError : public std::runtime_error {
 public:
  MiniRuntimeError(const std::string& message, int line)
      : std::runtime_error("line " + std::to_string(line) + ": " + message) {}
};

using Int = std::int64_t;

namespace mini {

enum class BinOp {
  Add, Sub, Mul, Div, Mod,
  Lt, Le, Gt, Ge, Eq, Ne,
  BitAnd, BitOr, BitXor, Shl, Shr,
  LogAnd, LogOr,
};

enum class UnOp { Neg, Not, BitNot, Plus };

struct Expr {
  enum class Kind { Const, Var, InLen, InRead, Unary, Binary } kind;
  Int value = 0;  // Const value or variable slot
  BinOp bin = BinOp::Add;
  UnOp un = UnOp::Neg;
  std::unique_ptr<Expr> lhs;
  std::unique_ptr<Expr> rhs;
  int line = 0;
};

struct Stmt {
  enum class Kind { Assign, Shortcut, If, While, Print, Continue, Break, Block }
      kind;
  int slot = -1;
  BinOp op = BinOp::Add;  // Shortcut only
  std::unique_ptr<Expr> expr;
  std::vector<std::unique_ptr<Stmt>> body;       // Block, While, If-then
  std::vector<std::unique_ptr<Stmt>> else_body;  // If
  bool has_else = false;
  int line = 0;
};

inline Int wrap_add(Int a, Int b) {
  return static_cast<Int>(static_cast<std::uint64_t>(a) +
                          static_cast<std::uint64_t>(b));
}
inline Int wrap_sub(Int a, Int b) {
  return static_cast<Int>(static_cast<std::uint64_t>(a) -
                          static_cast<std::uint64_t>(b));
}
inline Int wrap_mul(Int a, Int b) {
  return static_cast<Int>(static_cast<std::uint64_t>(a) *
                          static_cast<std::uint64_t>(b));
}

}  // namespace mini

class MiniProgram {
 public:
  const std::vector<std::unique_ptr<mini::Stmt>>& statements() const {
    return statements_;
  }
  const std::vector<std::string>& variables() const { return variables_; }

  // Number of non-block statements, nested ones included.
  std::size_t statement_count() const { return count(statements_); }

 private:
  friend class MiniParser;

  static std::size_t count(const std::vector<std::unique_ptr<mini::Stmt>>& v) {
    std::size_t n = 0;
    for (const auto& s : v) {
      if (s->kind != mini::Stmt::Kind::Block) ++n;
      n += count(s->body) + count(s->else_body);
    }
    return n;
  }

  std::vector<std::unique_ptr<mini::Stmt>> statements_;
  std::vector<std::string> variables_;
};

class MiniParser {
 public:
  explicit MiniParser(const SourceUnit& unit) {
    for (const auto& tok : unit.tokens)
      if (tok.kind != TokenKind::Comment) tokens_.push_back(&tok);
    end_line_ = unit.line_count() + 1;
  }

  MiniProgram parse() {
    MiniProgram program;
    while (!at_end()) program.statements_.push_back(statement());
    for (const auto& [name, where] : first_read_) {
      if (!assigned_.contains(name))
        throw CompileError("use of undeclared variable '" + name + "'",
                           where.first, where.second);
    }
    program.variables_ = slot_names_;
    return program;
  }

 private:
  using StmtPtr = std::unique_ptr<mini::Stmt>;
  using ExprPtr = std::unique_ptr<mini::Expr>;

  static bool is_keyword(std::string_view s) {
    return s == "if" || s == "else" || s == "while" || s == "print" ||
           s == "continue" || s == "break" || s == "in" || s == "in_len";
  }

  bool at_end() const { return pos_ >= tokens_.size(); }

  const Token* peek(std::size_t ahead = 0) const {
    return pos_ + ahead < tokens_.size() ? tokens_[pos_ + ahead] : nullptr;
  }

  bool check(std::string_view lexeme, std::size_t ahead = 0) const {
    const Token* t = peek(ahead);
    return t && t->kind != TokenKind::StringLiteral && t->lexeme == lexeme;
  }

  [[noreturn]] void fail(const std::string& message) const {
    if (const Token* t = peek())
      throw CompileError(message + ", found '" + t->lexeme + "'", t->line,
                         t->col);
    throw CompileError(message + ", found end of input", end_line_, 1);
  }

  const Token& expect(std::string_view lexeme) {
    if (!check(lexeme)) fail("expected '" + std::string(lexeme) + "'");
    return *tokens_[pos_++];
  }

  int slot_for(const std::string& name) {
    auto [it, inserted] =
        slots_.emplace(name, static_cast<int>(slot_names_.size()));
    if (inserted) slot_names_.push_back(name);
    return it->second;
  }

  StmtPtr make_stmt(mini::Stmt::Kind kind, int line) {
    auto s = std::make_unique<mini::Stmt>();
    s->kind = kind;
    s->line = line;
    return s;
  }

  StmtPtr statement() {
    const Token& tok = *peek();
    if (tok.kind == TokenKind::Identifier) {
      if (tok.lexeme == "if") return if_statement();
      if (tok.lexeme == "while") return while_statement();
      if (tok.lexeme == "print") {
        ++pos_;
        auto s = make_stmt(mini::Stmt::Kind::Print, tok.line);
        expect("(");
        s->expr = expression();
        expect(")");
        expect(";");
        return s;
      }
      if (tok.lexeme == "continue" || tok.lexeme == "break") {
        ++pos_;
        if (loop_depth_ == 0)
          throw CompileError("'" + tok.lexeme + "' outside of a loop",
                             tok.line, tok.col);
        expect(";");
        return make_stmt(tok.lexeme == "continue" ? mini::Stmt::Kind::Continue
                                                  : mini::Stmt::Kind::Break,
                         tok.line);
      }
      if (tok.lexeme == "in" || tok.lexeme == "in_len")
        throw CompileError("'" + tok.lexeme + "' is read-only", tok.line,
                           tok.col);
      if (tok.lexeme == "else") fail("'else' without 'if'");
      return assignment();
    }
    if (check("{")) return block();
    fail("expected a statement");
  }

  StmtPtr assignment() {
    const Token& target = *tokens_[pos_++];
    const Token* op = peek();
    if (!op) fail("expected assignment operator");
    StmtPtr s;
    if (op->lexeme == "=") {
      s = make_stmt(mini::Stmt::Kind::Assign, target.line);
    } else if (op->kind == TokenKind::ShortcutAssign) {
      s = make_stmt(mini::Stmt::Kind::Shortcut, target.line);
      switch (op->lexeme[0]) {
        case '+': s->op = mini::BinOp::Add; break;
        case '-': s->op = mini::BinOp::Sub; break;
        case '*': s->op = mini::BinOp::Mul; break;
        case '/': s->op = mini::BinOp::Div; break;
        default: s->op = mini::BinOp::Mod; break;
      }
      note_read(target);
    } else {
      fail("expected assignment operator");
    }
    ++pos_;
    s->slot = slot_for(target.lexeme);
    assigned_.insert(target.lexeme);
    s->expr = expression();
    expect(";");
    return s;
  }

  StmtPtr block() {
    const Token& open = expect("{");
    auto s = make_stmt(mini::Stmt::Kind::Block, open.line);
    while (!check("}")) {
      if (at_end()) fail("expected '}'");
      s->body.push_back(statement());
    }
    ++pos_;
    return s;
  }

  std::vector<StmtPtr> body() {
    std::vector<StmtPtr> out;
    if (at_end()) fail("expected a statement");
    out.push_back(statement());
    return out;
  }

  StmtPtr if_statement() {
    const Token& kw = *tokens_[pos_++];
    auto s = make_stmt(mini::Stmt::Kind::If, kw.line);
    expect("(");
    s->expr = expression();
    expect(")");
    s->body = body();
    if (check("else")) {
      ++pos_;
      s->has_else = true;
      s->else_body = body();
    }
    return s;
  }

  StmtPtr while_statement() {
    const Token& kw = *tokens_[pos_++];
    auto s = make_stmt(mini::Stmt::Kind::While, kw.line);
    expect("(");
    s->expr = expression();
    expect(")");
    ++loop_depth_;
    s->body = body();
    --loop_depth_;
    return s;
  }

  // Precedence climbing over the C operator levels.
  struct Level {
    std::string_view lexeme;
    mini::BinOp op;
    int prec;
  };

  static std::optional<Level> binary_level(const Token& t) {
    static constexpr Level kLevels[] = {
        {"||", mini::BinOp::LogOr, 1},   {"&&", mini::BinOp::LogAnd, 2},
        {"|", mini::BinOp::BitOr, 3},    {"^", mini::BinOp::BitXor, 4},
        {"&", mini::BinOp::BitAnd, 5},   {"==", mini::BinOp::Eq, 6},
        {"!=", mini::BinOp::Ne, 6},      {"<", mini::BinOp::Lt, 7},
        {"<=", mini::BinOp::Le, 7},      {">", mini::BinOp::Gt, 7},
        {">=", mini::BinOp::Ge, 7},      {"<<", mini::BinOp::Shl, 8},
        {">>", mini::BinOp::Shr, 8},     {"+", mini::BinOp::Add, 9},
        {"-", mini::BinOp::Sub, 9},      {"*", mini::BinOp::Mul, 10},
        {"/", mini::BinOp::Div, 10},     {"%", mini::BinOp::Mod, 10},
    };
    if (t.kind == TokenKind::StringLiteral || t.kind == TokenKind::Comment)
      return std::nullopt;
    for (const auto& l : kLevels)
      if (t.lexeme == l.lexeme) return l;
    return std::nullopt;
  }

  ExprPtr expression(int min_prec = 1) {
    ExprPtr lhs = unary();
    while (const Token* t = peek()) {
      auto level = binary_level(*t);
      if (!level || level->prec < min_prec) break;
      ++pos_;
      auto node = std::make_unique<mini::Expr>();
      node->kind = mini::Expr::Kind::Binary;
      node->bin = level->op;
      node->line = t->line;
      node->lhs = std::move(lhs);
      node->rhs = expression(level->prec + 1);
      lhs = std::move(node);
    }
    return lhs;
  }

  ExprPtr unary() {
    const Token* t = peek();
    if (!t) fail("expected an expression");
    std::optional<mini::UnOp> op;
    if (t->lexeme == "-") op = mini::UnOp::Neg;
    else if (t->lexeme == "+") op = mini::UnOp::Plus;
    else if (t->lexeme == "!") op = mini::UnOp::Not;
    else if (t->lexeme == "~") op = mini::UnOp::BitNot;
    if (op && t->kind != TokenKind::StringLiteral) {
      ++pos_;
      auto node = std::make_unique<mini::Expr>();
      node->kind = mini::Expr::Kind::Unary;
      node->un = *op;
      node->line = t->line;
      node->lhs = unary();
      return node;
    }
    return primary();
  }

  ExprPtr primary() {
    const Token* t = peek();
    if (!t) fail("expected an expression");
    auto node = std::make_unique<mini::Expr>();
    node->line = t->line;
    if (t->kind == TokenKind::Literal) {
      node->kind = mini::Expr::Kind::Const;
      node->value = parse_literal(*t);
      ++pos_;
      return node;
    }
    if (t->kind == TokenKind::Identifier) {
      if (t->lexeme == "in_len") {
        ++pos_;
        node->kind = mini::Expr::Kind::InLen;
        return node;
      }
      if (t->lexeme == "in") {
        ++pos_;
        expect("[");
        node->kind = mini::Expr::Kind::InRead;
        node->lhs = expression();
        expect("]");
        return node;
      }
      if (is_keyword(t->lexeme)) fail("unexpected keyword");
      ++pos_;
      node->kind = mini::Expr::Kind::Var;
      node->value = slot_for(t->lexeme);
      note_read(*t);
      return node;
    }
    if (check("(")) {
      ++pos_;
      auto inner = expression();
      expect(")");
      return inner;
    }
    fail("expected an expression");
  }

  static Int parse_literal(const Token& t) {
    std::uint64_t v = 0;
    for (char c : t.lexeme) {
      if (c < '0' || c > '9')
        throw CompileError("invalid integer literal '" + t.lexeme + "'",
                           t.line, t.col);
      if (v > (std::numeric_limits<std::uint64_t>::max() - 9) / 10)
        throw CompileError("integer literal out of range", t.line, t.col);
      v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    if (v > static_cast<std::uint64_t>(std::numeric_limits<Int>::max()))
      throw CompileError("integer literal out of range", t.line, t.col);
    return static_cast<Int>(v);
  }

  void note_read(const Token& t) {
    first_read_.try_emplace(t.lexeme, t.line, t.col);
  }

  std::vector<const Token*> tokens_;
  std::size_t pos_ = 0;
  int end_line_ = 1;
  int loop_depth_ = 0;
  std::map<std::string, int> slots_;
  std::vector<std::string> slot_names_;
  std::set<std::string> assigned_;
  std::map<std::string, std::pair<int, int>> first_read_;
};

inline MiniProgram parse_mini(const SourceUnit& source) {
  if (source.language != LanguageTag::mini)
    throw CompileError("source is not tagged as MiniImp", 1, 1);
  return MiniParser(source).parse();
}

struct Evaluation {
  std::string output;
  std::uint64_t steps = 0;
};

class MiniInterpreter {
 public:
  MiniInterpreter(const MiniProgram& program, std::span<const Int> input,
                  std::uint64_t step_budget)
      : program_(program),
        input_(input),
        budget_(step_budget),
        vars_(program.variables().size(), 0) {}

  Evaluation run() {
    exec_list(program_.statements());
    check_budget();
    return {std::move(output_), steps_};
  }

 private:
  enum class Flow { Normal, Continue, Break };

  void check_budget() const {
    if (steps_ > budget_) throw BudgetExceeded(budget_, steps_);
  }

  Flow exec_list(const std::vector<std::unique_ptr<mini::Stmt>>& list) {
    for (const auto& s : list) {
      Flow f = exec(*s);
      if (f != Flow::Normal) return f;
    }
    return Flow::Normal;
  }

  Flow exec(const mini::Stmt& s) {
    using K = mini::Stmt::Kind;
    if (s.kind != K::Block) {
      ++steps_;
      check_budget();
    }
    switch (s.kind) {
      case K::Assign:
        vars_[s.slot] = eval(*s.expr);
        return Flow::Normal;
      case K::Shortcut: {
        Int rhs = eval(*s.expr);
        ++steps_;
        vars_[s.slot] = apply(s.op, vars_[s.slot], rhs, s.line);
        return Flow::Normal;
      }
      case K::If:
        if (eval(*s.expr) != 0) return exec_list(s.body);
        if (s.has_else) return exec_list(s.else_body);
        return Flow::Normal;
      case K::While:
        while (eval(*s.expr) != 0) {
          if (exec_list(s.body) == Flow::Break) break;
          ++steps_;  // next condition test
          check_budget();
        }
        return Flow::Normal;
      case K::Print:
        output_ += std::to_string(eval(*s.expr));
        output_ += '\n';
        return Flow::Normal;
      case K::Continue:
        return Flow::Continue;
      case K::Break:
        return Flow::Break;
      case K::Block:
        return exec_list(s.body);
    }
    return Flow::Normal;
  }

  static Int apply(mini::BinOp op, Int a, Int b, int line) {
    using B = mini::BinOp;
    switch (op) {
      case B::Add: return mini::wrap_add(a, b);
      case B::Sub: return mini::wrap_sub(a, b);
      case B::Mul: return mini::wrap_mul(a, b);
      case B::Div:
        if (b == 0) throw MiniRuntimeError("division by zero", line);
        if (b == -1) return mini::wrap_sub(0, a);
        return a / b;
      case B::Mod:
        if (b == 0) throw MiniRuntimeError("modulo by zero", line);
        if (b == -1) return 0;
        return a % b;
      case B::Lt: return a < b;
      case B::Le: return a <= b;
      case B::Gt: return a > b;
      case B::Ge: return a >= b;
      case B::Eq: return a == b;
      case B::Ne: return a != b;
      case B::BitAnd: return a & b;
      case B::BitOr: return a | b;
      case B::BitXor: return a ^ b;
      case B::Shl:
        return static_cast<Int>(static_cast<std::uint64_t>(a) << (b & 63));
      case B::Shr: return a >> (b & 63);
      case B::LogAnd:
      case B::LogOr: break;
    }
    return 0;
  }

  Int eval(const mini::Expr& e) {
    using K = mini::Expr::Kind;
    switch (e.kind) {
      case K::Const: return e.value;
      case K::Var: return vars_[static_cast<std::size_t>(e.value)];
      case K::InLen: return static_cast<Int>(input_.size());
      case K::InRead: {
        Int idx = eval(*e.lhs);
        ++steps_;
        if (idx < 0 || static_cast<std::uint64_t>(idx) >= input_.size())
          throw MiniRuntimeError(
              "in[" + std::to_string(idx) + "] out of bounds (in_len = " +
                  std::to_string(input_.size()) + ")",
              e.line);
        return input_[static_cast<std::size_t>(idx)];
      }
      case K::Unary: {
        Int v = eval(*e.lhs);
        ++steps_;
        switch (e.un) {
          case mini::UnOp::Neg: return mini::wrap_sub(0, v);
          case mini::UnOp::Not: return v == 0;
          case mini::UnOp::BitNot: return ~v;
          case mini::UnOp::Plus: return v;
        }
        return v;
      }
      case K::Binary: {
        ++steps_;
        if (e.bin == mini::BinOp::LogAnd)
          return eval(*e.lhs) != 0 && eval(*e.rhs) != 0;
        if (e.bin == mini::BinOp::LogOr)
          return eval(*e.lhs) != 0 || eval(*e.rhs) != 0;
        Int a = eval(*e.lhs);
        Int b = eval(*e.rhs);
        return apply(e.bin, a, b, e.line);
      }
    }
    return 0;
  }

  const MiniProgram& program_;
  std::span<const Int> input_;
  std::uint64_t budget_;
  std::vector<Int> vars_;
  std::string output_;
  std::uint64_t steps_ = 0;
};

// Runs `program` on `input`. Throws BudgetExceeded once more than
// `step_budget` steps have been spent and MiniRuntimeError on division by
// zero or an out-of-bounds read.
inline Evaluation eval_mini(const MiniProgram& program,
                            std::span<const Int> input,
                            std::uint64_t step_budget) {
  return MiniInterpreter(program, input, step_budget).run();
}

}  // namespace mutopt
