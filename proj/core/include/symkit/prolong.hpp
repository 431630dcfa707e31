#pragma once

#include <map>
#include <string>
#include <vector>

#include "symkit/expr.hpp"
#include "symkit/jet.hpp"

namespace symkit {

class InsufficientOrder : public Error {
 public:
  using Error::Error;
};

/// Point-symmetry generator sum_j eta_j D[u_j] + sum_i theta_i D[x_i].
struct Generator {
  std::vector<Expr> theta;  // one per independent variable
  std::vector<Expr> eta;    // one per dependent variable

  bool is_zero() const;
  friend bool operator==(const Generator& a, const Generator& b) = default;
};

Generator zero_generator(const JetSpace& space);

/// Variables in generator print order: dependent first, then independent.
std::vector<std::string> generator_vars(const JetSpace& space);
Expr& component(Generator& g, const JetSpace& space, const std::string& var);
const Expr& component(const Generator& g, const JetSpace& space, const std::string& var);

/// D-notation, e.g. `(u*t - x)*D[u] - t^2*D[t]`.
std::string to_string(const Generator& g, const JetSpace& space);
/// Reads a generator from an expression linear in D[v] atoms.
Generator generator_from_expr(const Expr& e, const JetSpace& space);
Generator parse_generator(const std::string& text, const Declarations& decl);

/// Unknown-coefficient ansatz: theta_<x>(x..., u...) and eta_<u>(x..., u...).
Generator generic_generator(const JetSpace& space);
std::vector<std::string> generic_unknowns(const JetSpace& space);

/// Characteristics Q_j = eta_j - sum_i u_{j,i} theta_i.
std::vector<Expr> evolutionary(const Generator& g, const JetSpace& space);

/// Prolongation of a generator up to a fixed order. Coefficients of jet
/// coordinates are computed on demand and memoized.
class ProlongedGenerator {
 public:
  ProlongedGenerator(Generator base, JetSpace space, std::size_t order);

  const Generator& base() const { return base_; }
  const JetSpace& space() const { return space_; }
  std::size_t order() const { return order_; }

  /// eta^{(k)} for a Dep or Jet coordinate.
  Expr coefficient(const Atom& jet);
  /// Action of the prolonged operator on `e`.
  Expr apply(const Expr& e);

 private:
  Expr d_theta(std::size_t i, const std::string& x);

  Generator base_;
  JetSpace space_;
  std::size_t order_;
  std::map<Atom, Expr, AtomLess> coeffs_;
  std::map<std::pair<std::size_t, std::string>, Expr> dtheta_;
};

ProlongedGenerator prolong(const Generator& g, const JetSpace& space, std::size_t order);
Expr apply_prolonged(ProlongedGenerator& pg, const Expr& e);

struct DeterminingSystem {
  JetSpace space;
  std::vector<std::string> params;
  std::vector<std::string> unknowns;
  std::vector<std::string> vars;  // arguments of every unknown
  Generator ansatz;
  std::vector<Expr> eqs;
};

DeterminingSystem determining_system(const DESystem& sys);

/// Residuals of the invariance condition reduced modulo the system.
std::vector<Expr> check_symmetry(const DESystem& sys, const Generator& g);
std::vector<Expr> check_symmetry(const DESystem& sys, const OrthonomicForm& form, const Generator& g);

/// Scales an equation so its leading coefficient is 1 after clearing denominators.
Expr make_primitive(const Expr& e);

}  // namespace symkit
