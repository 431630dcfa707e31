#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <gmpxx.h>

namespace symkit {

using Rational = mpq_class;

std::string to_string(const Rational& q);
bool is_integer(const Rational& q);

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NonPolynomial : public Error {
 public:
  using Error::Error;
};

enum class AtomKind : std::uint8_t {
  Param,  // named parameter
  Indep,  // independent variable x_i
  Dep,    // dependent variable u_j (jet coordinate of order zero)
  Jet,    // u_{j,I} with |I| >= 1
  Fn,     // unknown function f(args), optionally with a derivative multi-index
  Elem,   // exp/ln/trig applied to an expression
  Pow,    // non-monomial base raised to a non-positive-integer power
  DOp     // D[v], only meaningful inside generator text
};

enum class ElemTag : std::uint8_t { Exp, Ln, Sin, Cos, Tan, Sinh, Cosh, Tanh };

const char* elem_name(ElemTag tag);
std::optional<ElemTag> elem_from_name(const std::string& name);

struct AtomNode;
using Atom = std::shared_ptr<const AtomNode>;

struct Factor {
  Atom atom;
  Rational exp;
};
using Monomial = std::vector<Factor>;

struct Term {
  Rational coeff;
  Monomial mono;
};

enum class NodeKind : std::uint8_t {
  RationalConstant,
  NamedParameter,
  IndepVar,
  DepVar,
  JetCoord,
  UnknownFn,
  PartialDeriv,
  ElemFn,
  DOperator,
  Sum,
  Product,
  Power
};

/// Immutable expression in canonical form.
///
/// Internally an expression is a sum of terms `c * a1^e1 * ... * ak^ek` with
/// exact rational coefficients and exponents over a fixed set of atoms.
/// Terms and factors are kept sorted, so structural equality coincides with
/// equality for polynomials over the atoms. Compound atoms (elementary
/// functions, powers of sums) are opaque.
class Expr {
 public:
  Expr();
  Expr(long value);  // NOLINT(google-explicit-constructor)
  Expr(const Rational& value);  // NOLINT(google-explicit-constructor)

  static Expr from_atom(const Atom& atom);
  static Expr from_terms(std::vector<Term> terms);  // normalizes

  const std::vector<Term>& terms() const { return rep_->terms; }
  std::size_t size() const { return rep_->terms.size(); }
  bool is_zero() const { return rep_->terms.empty(); }
  bool is_constant() const;
  std::optional<Rational> as_rational() const;
  /// The atom if the expression is exactly one atom with coefficient and exponent 1.
  Atom as_atom() const;
  /// True when the expression is a single term.
  bool is_monomial() const { return rep_->terms.size() == 1; }

  // Tree view of the canonical form.
  NodeKind kind() const;
  std::vector<Expr> children() const;

  std::size_t hash() const { return rep_->hash; }

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);
  Expr& operator+=(const Expr& b) { return *this = *this + b; }
  Expr& operator-=(const Expr& b) { return *this = *this - b; }
  Expr& operator*=(const Expr& b) { return *this = *this * b; }

  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  struct Rep {
    std::vector<Term> terms;
    std::size_t hash = 0;
  };
  // Takes sorted, combined terms.
  static Expr from_sorted(std::vector<Term> terms);
  explicit Expr(std::shared_ptr<const Rep> rep) : rep_(std::move(rep)) {}
  std::shared_ptr<const Rep> rep_;

  friend class TermAccumulator;
};

struct AtomNode {
  AtomKind kind{};
  std::string name;
  std::vector<std::string> args;   // Fn: argument variable names
  std::vector<std::string> index;  // Jet / Fn: sorted derivative multi-index
  ElemTag tag{};
  Expr inner;  // Elem argument or Pow base
  std::size_t hash = 0;
};

int compare(const Atom& a, const Atom& b);
int compare(const Monomial& a, const Monomial& b);
int compare(const Expr& a, const Expr& b);

struct AtomLess {
  bool operator()(const Atom& a, const Atom& b) const { return compare(a, b) < 0; }
};
struct MonomialLess {
  bool operator()(const Monomial& a, const Monomial& b) const { return compare(a, b) < 0; }
};
struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

// Atom constructors.
Atom param_atom(const std::string& name);
Atom indep_atom(const std::string& name);
Atom dep_atom(const std::string& name);
/// Jet coordinate; a dependent variable when `index` is empty.
Atom jet_atom(const std::string& dep, std::vector<std::string> index);
Atom fn_atom(const std::string& name, std::vector<std::string> args,
             std::vector<std::string> index = {});
Atom dop_atom(const std::string& var);

bool atom_equal(const Atom& a, const Atom& b);

// Expression constructors.
Expr param(const std::string& name);
Expr indep(const std::string& name);
Expr dep(const std::string& name);
Expr jet(const std::string& dep, std::vector<std::string> index);
Expr fn(const std::string& name, std::vector<std::string> args,
        std::vector<std::string> index = {});
Expr elem(ElemTag tag, const Expr& arg);
Expr pow(const Expr& base, const Rational& exponent);
inline Expr exp(const Expr& a) { return elem(ElemTag::Exp, a); }
inline Expr ln(const Expr& a) { return elem(ElemTag::Ln, a); }

/// Idempotent canonicalization. Expressions are always canonical, so this is
/// the identity on values; it exists for construction from raw terms.
Expr normalize(const Expr& e);

/// Derivative of a leaf atom (anything except Elem and Pow).
using LeafDerivative = std::function<Expr(const Atom&)>;

/// Derivation extended from its action on leaves by the chain rule.
Expr derive(const Expr& e, const LeafDerivative& leaf);

/// Partial derivative with respect to a variable or jet coordinate atom.
/// Unknown functions depending on a variable of the same name acquire a
/// derivative index.
Expr pdiff(const Expr& e, const Atom& v);
Expr pdiff(const Expr& e, const Expr& v);
/// Partial derivative with respect to the variable named `var`, whatever its role.
Expr pdiff_var(const Expr& e, const std::string& var);

using Rules = std::map<Atom, Expr, AtomLess>;

/// Simultaneous substitution of atoms, also inside compound atoms.
Expr substitute(const Expr& e, const Rules& rules);

/// Replaces the unknown function `name` (and all its derivatives) by
/// `value`, differentiating `value` as needed.
Expr substitute_function(const Expr& e, const std::string& name, const Expr& value);

/// Calls `visit` on every atom occurring in `e`, including atoms nested in
/// compound atoms (the compound atom itself is visited first).
void for_each_atom(const Expr& e, const std::function<void(const Atom&)>& visit);

/// Distinct atoms of `e` (recursive), sorted.
std::vector<Atom> atoms_of(const Expr& e);

/// True when `e` contains an atom satisfying `pred` (recursively).
bool contains_atom(const Expr& e, const std::function<bool(const Atom&)>& pred);

/// Names of variables (Param/Indep/Dep atoms, and Fn arguments) that `e` depends on.
std::vector<std::string> free_variables(const Expr& e);

bool depends_on_variable(const Expr& e, const std::string& var);

/// Coefficient of `atom^k` when `e` is viewed as a polynomial in `atom`.
Expr coefficient(const Expr& e, const Atom& atom, const Rational& k);

/// Multiplies `e` by the product of all denominators (negative powers of
/// atoms) so the result has no negative exponents at top level.
Expr clear_denominators(const Expr& e);

/// Exact zero test aware of denominators.
bool is_zero_rational(const Expr& e);

struct SplitEntry {
  Monomial monomial;  // over splitting atoms
  Expr coefficient;
};

/// Splits `e` as a polynomial over the atoms selected by `is_splitting`.
/// Throws NonPolynomial if a splitting atom occurs inside a compound atom or
/// with a non-natural exponent.
std::vector<SplitEntry> split_on(const Expr& e, const std::function<bool(const Atom&)>& is_splitting);

/// Coefficient extraction for linear-independence splitting: monomials are
/// formed over jet coordinates of positive order plus base variables not
/// occurring as arguments of any function in `unknowns`.
std::vector<SplitEntry> split_coefficients(const Expr& e, const std::vector<std::string>& unknowns);

Expr monomial_expr(const Monomial& m);

std::string to_string(const Expr& e);
std::string to_string(const Atom& a);
std::ostream& operator<<(std::ostream& os, const Expr& e);

}  // namespace symkit

template <>
struct std::hash<symkit::Expr> {
  std::size_t operator()(const symkit::Expr& e) const noexcept { return e.hash(); }
};
