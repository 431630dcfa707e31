#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "symkit/linalg.hpp"
#include "symkit/parse.hpp"
#include "symkit/prolong.hpp"

namespace symkit {

class ParameterBearing : public Error {
 public:
  using Error::Error;
};

class SingularExponentMatrix : public Error {
 public:
  using Error::Error;
};

class NoDecomposition : public Error {
 public:
  using Error::Error;
};

/// x_i' = x_i * sum_j A_ij * prod_k x_k^B_jk
struct QPSystem {
  std::vector<std::string> vars;
  std::vector<std::string> params;
  std::string time = "t";
  std::vector<std::vector<Expr>> A;  // n x m
  std::vector<Vec> B;                // m x n

  std::size_t n() const { return vars.size(); }
  std::size_t m() const { return B.size(); }
  /// Index of a quasi-monomial with all-zero exponents.
  std::optional<std::size_t> constant_monomial() const;
  /// Quasi-monomial j as an expression in x.
  Expr monomial(std::size_t j) const;
  /// Right-hand sides x_i'.
  std::vector<Expr> rhs() const;
  /// Time derivative along the flow, including explicit time dependence.
  Expr time_derivative(const Expr& e) const;
  Declarations decl() const;
  JetSpace space() const;
  bool has_parameters() const;
};

/// Collects quasi-monomials of x_i'/x_i; throws Error when a right-hand side
/// is not quasi-polynomial.
QPSystem qp_from_equations(const std::vector<std::string>& vars, const std::vector<std::string>& params,
                           const std::vector<Expr>& rhs, const std::string& time = "t");
/// Program with one independent variable (time) and equations diff(x,t) = rhs.
QPSystem qp_from_program(const Program& prog);
/// {"vars": [...], "params": [...], "A": [[...]], "B": [[...]]}; entries are
/// numbers or expression strings.
QPSystem qp_from_json(const nlohmann::json& j);
nlohmann::json to_json(const QPSystem& sys);

/// y_i' = y_i sum_j M_ij y_j with y_i = prod_k x_k^B_ik.
struct LVForm {
  std::vector<std::string> x;
  std::vector<std::string> y;
  std::string time = "t";
  std::vector<Vec> B;                // m x n, including padding rows
  std::vector<std::vector<Expr>> M;  // m x m
  std::optional<std::size_t> constant;
  std::size_t padded = 0;            // unit monomials appended to reach rank n
  std::optional<Matrix> back;        // n x m: x_k = prod_i y_i^back(k,i)

  std::size_t m() const { return y.size(); }
  Expr y_var(std::size_t i) const { return dep(y[i]); }
  /// y_i as an expression in x.
  Expr y_in_x(std::size_t i) const;
  /// Substitutes y = y(x).
  Expr to_x(const Expr& e) const;
  /// y_i'.
  Expr lv_rhs(std::size_t i) const;
  JetSpace space() const;
  Generator flow() const;
  /// Sum_j c_j y_j.
  Expr linear(const std::vector<Expr>& c) const;
  /// Rational M, or ParameterBearing. The searches below accept parameters and
  /// treat them as generic.
  Matrix rational_M() const;
};

LVForm to_lv(const QPSystem& sys);

/// f' = (lambda . y) f along the LV flow.
struct SemiInvariant {
  Expr f;            // homogeneous in y, constant variable included
  std::size_t degree = 0;
  std::vector<Expr> lambda;  // one entry per LV variable
  Expr f_y;          // constant variable set to 1
  Expr f_x;          // in the original variables
  Expr lambda_y;
};

std::vector<SemiInvariant> darboux(const LVForm& lv, int degree);
bool verify_semi_invariant(const LVForm& lv, const SemiInvariant& s);

enum class IntegralKind { Polynomial, Product, Ratio, QuasiMonomial, Log, Decomposition };
const char* kind_name(IntegralKind k);

struct FirstIntegral {
  IntegralKind kind;
  Expr numerator;
  Expr denominator = Expr(1);

  /// numerator / denominator.
  Expr value() const;
};

/// dI/dt = 0 along the flow (ratios checked as N'D - ND' = 0).
bool is_first_integral(const QPSystem& sys, const FirstIntegral& I);

std::vector<FirstIntegral> qp_first_integrals(const QPSystem& sys, int degree);
/// P(x) + sum xi_k ln x_k; with `mixed`, polynomials in x and ln x_k (each
/// logarithm at most linearly).
std::vector<FirstIntegral> log_integrals(const QPSystem& sys, int degree, bool mixed = false);

/// Semi-invariant field [F, T] = (lambda . y) T and the symmetry built from it.
struct QPSymmetry {
  Generator T;
  std::size_t degree = 0;
  std::vector<Expr> lambda;
  std::optional<Vec> xi;              // y^xi T exp(-rho t) commutes with the flow
  Expr rho;
  std::optional<Generator> G;         // in y
  std::optional<Generator> G_x;       // pushed forward to x when consistent
};

std::vector<QPSymmetry> qp_symmetries(const QPSystem& sys, int degree);

/// Writes `target` as sum_k a_k(x) gens[k] and returns the coefficients that
/// are first integrals of `flow`. Throws NoDecomposition when impossible.
std::vector<FirstIntegral> flow_decomposition_integrals(const std::vector<Generator>& gens, const Generator& target,
                                                        const JetSpace& space, const Generator& flow);

}  // namespace symkit
