#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "symkit/expr.hpp"

namespace symkit {

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position);
  /// Byte offset into the parsed text.
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Symbols declared by a DSL program.
struct Declarations {
  std::vector<std::string> indep;
  std::vector<std::string> dep;
  std::vector<std::string> params;
  std::vector<std::string> funs;                       // declaration order
  std::map<std::string, std::vector<std::string>> fun_args;

  bool is_indep(const std::string& n) const;
  bool is_dep(const std::string& n) const;
  bool is_param(const std::string& n) const;
  bool is_fun(const std::string& n) const;
  bool is_declared(const std::string& n) const;
};

struct Equation {
  Expr lhs;
  Expr rhs;
  Expr residual() const { return lhs - rhs; }
};

struct Program {
  Declarations decl;
  std::vector<Equation> equations;
  std::optional<Expr> lagrangian;
  std::vector<Expr> generators;  // linear in D[v] atoms
};

/// Parses a whole program: `indep x, t; dep u(x,t); param a; fun f(x,t);`
/// `eq lhs = rhs; lagrangian expr; gen expr;` with `#` line comments.
Program parse_program(const std::string& text);

/// Parses one expression against existing declarations.
Expr parse_expr(const std::string& text, const Declarations& decl);

}  // namespace symkit
