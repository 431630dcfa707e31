#pragma once

#include <optional>
#include <string>
#include <vector>

#include "symkit/linalg.hpp"
#include "symkit/prolong.hpp"

namespace symkit {

class NotClosed : public Error {
 public:
  using Error::Error;
};

struct AlgebraBasis {
  JetSpace space;
  std::vector<Generator> gens;

  std::size_t dim() const { return gens.size(); }
};

/// [G1, G2] as a vector field on the independent and dependent variables.
Generator commutator(const Generator& a, const Generator& b, const JetSpace& space);

/// Action of a generator on a function of the base variables.
Expr apply_generator(const Generator& g, const JetSpace& space, const Expr& f);

/// Rational coordinates of g in the span of `basis`, if there are any.
std::optional<Vec> decompose(const Generator& g, const std::vector<Generator>& basis);

/// Greedy linearly independent subset over Q, in input order.
std::vector<Generator> independent_subset(const std::vector<Generator>& gens);
bool linearly_independent(const std::vector<Generator>& gens);

struct TableEntry {
  Generator value;
  std::optional<Vec> coords;  // empty when not in the span of the basis
};

struct CommutationTable {
  std::vector<std::vector<TableEntry>> entries;
  bool closed = true;

  std::size_t dim() const { return entries.size(); }
};

CommutationTable commutation_table(const AlgebraBasis& basis);

/// Entry as a combination of G1..Gm, or the raw generator when not closed.
std::string entry_string(const TableEntry& e, const JetSpace& space);
std::string to_string(const CommutationTable& t, const JetSpace& space);

/// [G_a, G_b] = sum_k c(a,b,k) G_k.
class StructureConstants {
 public:
  explicit StructureConstants(std::size_t dim) : dim_(dim), c_(dim * dim * dim) {}
  std::size_t dim() const { return dim_; }
  Rational& operator()(std::size_t a, std::size_t b, std::size_t k) { return c_[(a * dim_ + b) * dim_ + k]; }
  const Rational& operator()(std::size_t a, std::size_t b, std::size_t k) const {
    return c_[(a * dim_ + b) * dim_ + k];
  }
  /// Exact Jacobi identity over all index triples.
  bool satisfies_jacobi() const;
  bool antisymmetric() const;

 private:
  std::size_t dim_;
  std::vector<Rational> c_;
};

/// Throws NotClosed if some commutator leaves the span.
StructureConstants structure_constants(const AlgebraBasis& basis);

/// Independent spanning set of all pairwise commutators.
AlgebraBasis derived_subalgebra(const AlgebraBasis& basis);

bool is_solvable(const AlgebraBasis& basis);

}  // namespace symkit
