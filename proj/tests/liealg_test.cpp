#include <gtest/gtest.h>

#include "symkit/liealg.hpp"
#include "test_util.hpp"

using namespace symkit;

namespace {

struct Heat {
  Program prog = corpus_program("heat.deq");
  JetSpace space{prog.decl.indep, prog.decl.dep};

  Generator G(const std::string& s) const { return parse_generator(s, prog.decl); }

  // Basis in the order of the published table.
  AlgebraBasis paper_basis() const {
    return {space,
            {G("D[t]"), G("D[x]"), G("u*D[u]"), G("2*t*D[t] + x*D[x]"), G("u*x*D[u] - 2*t*D[x]"),
             G("t^2*D[t] + 1/4*(-2*u*t - u*x^2)*D[u] + t*x*D[x]")}};
  }
};

// Applies both operator orders to a generic function and subtracts.
Generator commutator_oracle(const Generator& a, const Generator& b, const JetSpace& space) {
  auto vars = generator_vars(space);
  Expr f = fn("f", vars);
  Expr lhs = apply_generator(a, space, apply_generator(b, space, f)) - apply_generator(b, space, apply_generator(a, space, f));
  Generator out = zero_generator(space);
  for (const auto& v : vars) component(out, space, v) = coefficient(lhs, fn_atom("f", vars, {v}), 1);
  return out;
}

}  // namespace

TEST(Commutator, PublishedFixture) {
  Heat h;
  EXPECT_EQ(commutator(h.G("D[x]"), h.G("-1/2*u*x*D[u] + t*D[x]"), h.space), h.G("-1/2*u*D[u]"));
}

TEST(Commutator, Examples) {
  Heat h;
  EXPECT_TRUE(commutator(h.G("D[u]"), h.G("D[x]"), h.space).is_zero());
  EXPECT_EQ(commutator(h.G("u*D[u]"), h.G("u*D[x]"), h.space), h.G("u*D[x]"));
  EXPECT_EQ(commutator_oracle(h.G("u*D[u]"), h.G("u*D[x]"), h.space), h.G("u*D[x]"));
}

TEST(Commutator, MatchesOperatorOracle) {
  Heat h;
  std::mt19937 rng(7);
  for (int i = 0; i < 30; ++i) {
    Generator a = random_generator(rng, h.space, 2), b = random_generator(rng, h.space, 2);
    EXPECT_EQ(commutator(a, b, h.space), commutator_oracle(a, b, h.space));
  }
}

TEST(Commutator, AntisymmetryAndJacobi) {
  Heat h;
  std::mt19937 rng(2024);
  for (int i = 0; i < 100; ++i) {
    Generator a = random_generator(rng, h.space, 2), b = random_generator(rng, h.space, 2),
              c = random_generator(rng, h.space, 2);
    Generator ab = commutator(a, b, h.space), ba = commutator(b, a, h.space);
    for (std::size_t k = 0; k < ab.theta.size(); ++k) EXPECT_TRUE((ab.theta[k] + ba.theta[k]).is_zero());
    for (std::size_t k = 0; k < ab.eta.size(); ++k) EXPECT_TRUE((ab.eta[k] + ba.eta[k]).is_zero());
    Generator j1 = commutator(a, commutator(b, c, h.space), h.space);
    Generator j2 = commutator(b, commutator(c, a, h.space), h.space);
    Generator j3 = commutator(c, commutator(a, b, h.space), h.space);
    for (std::size_t k = 0; k < j1.theta.size(); ++k) EXPECT_TRUE((j1.theta[k] + j2.theta[k] + j3.theta[k]).is_zero());
    for (std::size_t k = 0; k < j1.eta.size(); ++k) EXPECT_TRUE((j1.eta[k] + j2.eta[k] + j3.eta[k]).is_zero());
  }
}

TEST(Table, HeatMatchesPublishedMatrix) {
  Heat h;
  auto t = commutation_table(h.paper_basis());
  EXPECT_TRUE(t.closed);
  const char* expected[6][6] = {
      {"0", "0", "0", "2*G1", "-2*G2", "-1/2*G3 + G4"},
      {"0", "0", "0", "G2", "G3", "-1/2*G5"},
      {"0", "0", "0", "0", "0", "0"},
      {"-2*G1", "-G2", "0", "0", "G5", "2*G6"},
      {"2*G2", "-G3", "0", "-G5", "0", "0"},
      {"1/2*G3 - G4", "1/2*G5", "0", "-2*G6", "0", "0"},
  };
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = 0; b < 6; ++b) EXPECT_EQ(entry_string(t.entries[a][b], h.space), expected[a][b]) << a << "," << b;
  }
}

TEST(Table, AbelianAndDiagonal) {
  Heat h;
  auto t = commutation_table({h.space, {h.G("D[x]"), h.G("D[t]")}});
  for (const auto& row : t.entries) {
    for (const auto& e : row) EXPECT_TRUE(e.value.is_zero());
  }
  auto full = commutation_table(h.paper_basis());
  for (std::size_t i = 0; i < 6; ++i) EXPECT_TRUE(full.entries[i][i].value.is_zero());
}

TEST(Table, NotClosedFlag) {
  Heat h;
  auto t = commutation_table({h.space, {h.G("D[x]"), h.G("x^2*D[x]")}});
  EXPECT_FALSE(t.closed);
  EXPECT_FALSE(t.entries[0][1].coords);
  EXPECT_EQ(entry_string(t.entries[0][1], h.space), "2*x*D[x]");
  EXPECT_THROW(structure_constants({h.space, {h.G("D[x]"), h.G("x^2*D[x]")}}), NotClosed);
}

TEST(StructureConstants, Heat) {
  Heat h;
  auto basis = h.paper_basis();
  auto c = structure_constants(basis);
  EXPECT_EQ(c(0, 3, 0), 2);
  EXPECT_TRUE(c.antisymmetric());
  EXPECT_TRUE(c.satisfies_jacobi());
  // Round trip: sum_k c_ab^k G_k equals the commutator.
  for (std::size_t a = 0; a < 6; ++a) {
    for (std::size_t b = 0; b < 6; ++b) {
      Generator sum = zero_generator(h.space);
      for (std::size_t k = 0; k < 6; ++k) {
        for (std::size_t i = 0; i < sum.theta.size(); ++i) sum.theta[i] += Expr(c(a, b, k)) * basis.gens[k].theta[i];
        for (std::size_t j = 0; j < sum.eta.size(); ++j) sum.eta[j] += Expr(c(a, b, k)) * basis.gens[k].eta[j];
      }
      EXPECT_EQ(sum, commutator(basis.gens[a], basis.gens[b], h.space));
    }
  }
}

TEST(StructureConstants, Abelian) {
  Heat h;
  auto c = structure_constants({h.space, {h.G("D[x]"), h.G("D[t]"), h.G("D[u]")}});
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) {
      for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(c(a, b, k), 0);
    }
  }
}

TEST(Derived, Examples) {
  auto prog = parse_program("indep x; dep u(x);");
  JetSpace space{prog.decl.indep, prog.decl.dep};
  auto G = [&](const char* s) { return parse_generator(s, prog.decl); };
  AlgebraBasis b{space, {G("D[u]"), G("D[x]"), G("u*D[x]")}};
  auto d = derived_subalgebra(b);
  ASSERT_EQ(d.dim(), 1u);
  EXPECT_TRUE(decompose(G("D[x]"), d.gens));
  EXPECT_EQ(derived_subalgebra(d).dim(), 0u);
  EXPECT_EQ(derived_subalgebra({space, {G("D[x]"), G("D[u]")}}).dim(), 0u);
}

TEST(Solvable, Examples) {
  auto prog = parse_program("indep x; dep u(x);");
  JetSpace space{prog.decl.indep, prog.decl.dep};
  auto G = [&](const char* s) { return parse_generator(s, prog.decl); };
  EXPECT_TRUE(is_solvable({space, {G("D[u]"), G("D[x]"), G("u*D[x]")}}));
  EXPECT_TRUE(is_solvable({space, {}}));
  EXPECT_FALSE(is_solvable({space, {G("D[x]"), G("x*D[x]"), G("x^2*D[x]")}}));
  // Another sl(2) realization, through the dependent variable.
  EXPECT_FALSE(is_solvable({space, {G("D[u]"), G("u*D[u]"), G("u^2*D[u]")}}));
  Heat h;
  EXPECT_FALSE(is_solvable(h.paper_basis()));
}

TEST(Independence, Decompose) {
  Heat h;
  auto basis = h.paper_basis().gens;
  EXPECT_TRUE(linearly_independent(basis));
  auto d = decompose(h.G("3*D[t] - 1/2*u*x*D[u] + t*D[x]"), basis);
  ASSERT_TRUE(d);
  EXPECT_EQ((*d)[0], 3);
  EXPECT_EQ((*d)[4], Rational(-1, 2));
  basis.push_back(h.G("D[t] + D[x]"));
  EXPECT_FALSE(linearly_independent(basis));
}
