#pragma once

#include <string>
#include <vector>

#include "symkit/linsolve.hpp"
#include "symkit/parse.hpp"
#include "symkit/prolong.hpp"

namespace symkit {

class NotVariationalSymmetry : public Error {
 public:
  using Error::Error;
};

/// First-order Lagrangian density L(x, u, u_{j,i}).
struct Lagrangian {
  JetSpace space;
  std::vector<std::string> params;
  Expr L;
};

/// Throws Error for Lagrangians of order two or more.
Lagrangian make_lagrangian(const JetSpace& space, const Expr& L, const std::vector<std::string>& params = {});
/// Uses the program's `lagrangian` statement.
Lagrangian lagrangian_from_program(const Program& prog);

/// dL/du_j - sum_i D_i dL/du_{j,i} = 0 for every dependent variable.
DESystem euler_lagrange(const Lagrangian& lag);

/// Components ordered like the independent variables.
struct ConservedCurrent {
  std::vector<std::string> order;
  std::vector<Expr> components;
};

Expr divergence(const ConservedCurrent& c, const JetSpace& space);
std::string to_string(const ConservedCurrent& c);

/// Names of the gauge unknowns f_i, one per independent variable.
std::vector<std::string> gauge_unknowns(const JetSpace& space);

/// DL - sum_i D_i f_i = 0 split on jet monomials, with theta, eta and f
/// unknown functions of (x, u). D is the prolongation plus the divergence of
/// theta times L.
DeterminingSystem noether_condition(const Lagrangian& lag);
/// The left-hand side DL - sum_i D_i f_i for concrete data.
Expr noether_residual(const Lagrangian& lag, const Generator& g, const std::vector<Expr>& f);

/// I_i = L theta_i + sum_j dL/du_{j,i} (eta_j - sum_k u_{j,k} theta_k) - f_i.
/// Throws NotVariationalSymmetry unless sum_i D_i I_i vanishes modulo the
/// Euler-Lagrange equations.
ConservedCurrent noether_current(const Lagrangian& lag, const Generator& g, const std::vector<Expr>& f);

struct NoetherSymmetry {
  Generator gen;
  std::vector<Expr> f;
  ConservedCurrent current;
};

/// Variational symmetries with theta, eta, f polynomial of degree <= d in
/// (x, u), solved through the linear solver. Currents whose generator is zero
/// are dropped; gauge terms are reduced against them.
std::vector<NoetherSymmetry> noether_solve(const Lagrangian& lag, int degree, const SolverParams& p = {});

}  // namespace symkit
