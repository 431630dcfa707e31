#pragma once

#include <map>
#include <string>
#include <vector>

#include "symkit/expr.hpp"
#include "symkit/parse.hpp"

namespace symkit {

class NotOrthonomic : public Error {
 public:
  using Error::Error;
};

/// Independent and dependent variable names of a jet space.
struct JetSpace {
  std::vector<std::string> indep;
  std::vector<std::string> dep;

  bool is_indep(const std::string& n) const;
  bool is_dep(const std::string& n) const;
};

/// A differential system F_mu = 0.
struct DESystem {
  JetSpace space;
  std::vector<std::string> params;
  std::vector<Expr> eqs;

  static DESystem from_program(const Program& prog);
};

/// True for Dep and Jet atoms.
bool is_jet_atom(const Atom& a);
/// Derivative order of a Dep/Jet atom.
std::size_t jet_order(const Atom& a);
/// Highest derivative order occurring in `e` (0 if none).
std::size_t max_order(const Expr& e);

/// Total derivative D_x. Unknown functions differentiate through their
/// arguments, including dependent variables.
Expr total_derivative(const Expr& e, const std::string& x, const JetSpace& space);
/// D_I for a multi-index of independent variables.
Expr total_derivative(const Expr& e, const std::vector<std::string>& index, const JetSpace& space);

/// Orderly ranking on jet coordinates: by order, then by how often each
/// independent variable (in declaration order) is differentiated, then by
/// dependent-variable declaration order.
class Ranking {
 public:
  explicit Ranking(JetSpace space) : space_(std::move(space)) {}
  /// Negative when a ranks below b.
  int compare(const Atom& a, const Atom& b) const;
  const JetSpace& space() const { return space_; }

 private:
  JetSpace space_;
};

struct OrthonomicForm {
  JetSpace space;
  std::map<Atom, Expr, AtomLess> rules;  // leader -> right-hand side
};

OrthonomicForm orthonomic(const DESystem& sys);

/// Reduction modulo an orthonomic form and its differential consequences.
/// Prolonged rules are derived lazily and cached per jet coordinate.
class Reducer {
 public:
  explicit Reducer(const OrthonomicForm& form) : form_(form) {}
  Expr reduce(const Expr& e);
  /// Normal form of a single jet coordinate.
  Expr reduce_jet(const Atom& j);

 private:
  const OrthonomicForm& form_;
  std::map<Atom, Expr, AtomLess> cache_;
};

Expr reduce_modulo(const Expr& e, const OrthonomicForm& form);

}  // namespace symkit
