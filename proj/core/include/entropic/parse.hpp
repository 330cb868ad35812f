#pragma once

// Concrete syntax: parenthesized prefix notation.
//
//   e ::= v | (app v v) | (let (x e) e) | (if v e e) | (sample)
//       | (factor v) | (op v ...) | (normal v v)
//   v ::= r | x | (lam x e)
//   K ::= (halt) | (letk (x e) K)
//
// Direct-style programs use the same forms with arbitrary expressions
// in operand positions. ';' starts a comment that runs to end of line.

#include <stdexcept>
#include <string>
#include <string_view>

#include "entropic/syntax.hpp"

namespace entropic {

class ParseError : public std::runtime_error {
 public:
  enum class Kind { Syntax, Arity, LetNormal };

  ParseError(Kind kind, int line, int column, const std::string& msg);

  Kind kind() const { return kind_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  Kind kind_;
  int line_;
  int column_;
};

ExprPtr parse_expr(std::string_view text);
DExprPtr parse_direct(std::string_view text);
Cont parse_cont(std::string_view text);
Value parse_value(std::string_view text);

// Shortest text that reads back to the same double.
std::string format_real(double r);

std::string print(const Value& v);
std::string print(const Expr& e);
std::string print(const ExprPtr& e);
std::string print(const DExpr& e);
std::string print(const Cont& k);

// One-word description of an expression's top form ("let", "sample", ...).
std::string_view head_name(const Expr& e);

bool is_keyword(std::string_view s);
bool is_identifier(std::string_view s);

}  // namespace entropic
