#include <gtest/gtest.h>

#include "symkit/prolong.hpp"
#include "test_util.hpp"

using namespace symkit;

namespace {

bool all_zero(const std::vector<Expr>& v) {
  for (const auto& e : v) {
    if (!is_zero_rational(e)) return false;
  }
  return true;
}

}  // namespace

TEST(Generator, PrintAndParse) {
  auto prog = corpus_program("burgers.deq");
  JetSpace space{prog.decl.indep, prog.decl.dep};
  Generator g = parse_generator("(u*t-x)*D[u] + (2*v*t-1)*D[v] - t^2*D[t] - t*x*D[x]", prog.decl);
  EXPECT_EQ(to_string(g, space), "(t*u - x)*D[u] + (2*t*v - 1)*D[v] - t*x*D[x] - t^2*D[t]");
  EXPECT_EQ(parse_generator(to_string(g, space), prog.decl), g);
}

TEST(Evolutionary, Examples) {
  auto prog = corpus_program("burgers.deq");
  JetSpace space{prog.decl.indep, prog.decl.dep};
  auto P = [&](const char* s) { return parse_expr(s, prog.decl); };
  Generator g = parse_generator("(u*t-x)*D[u] + (2*v*t-1)*D[v] - t^2*D[t] - t*x*D[x]", prog.decl);
  auto q = evolutionary(g, space);
  EXPECT_EQ(q[0], P("u*t - x + t^2*diff(u,t) + t*x*diff(u,x)"));
  auto heat = corpus_program("heat.deq");
  JetSpace hs{heat.decl.indep, heat.decl.dep};
  EXPECT_EQ(evolutionary(parse_generator("D[x]", heat.decl), hs)[0], parse_expr("-diff(u,x)", heat.decl));
  EXPECT_EQ(evolutionary(parse_generator("u*D[u]", heat.decl), hs)[0], parse_expr("u", heat.decl));
}

TEST(Prolong, FirstOrderCoefficients) {
  auto prog = corpus_program("heat.deq");
  JetSpace space{prog.decl.indep, prog.decl.dep};
  auto P = [&](const char* s) { return parse_expr(s, prog.decl); };
  auto pg = prolong(parse_generator("2*t*D[t] + x*D[x]", prog.decl), space, 2);
  EXPECT_EQ(pg.coefficient(jet_atom("u", {"x"})), P("-diff(u,x)"));
  EXPECT_EQ(pg.coefficient(jet_atom("u", {"t"})), P("-2*diff(u,t)"));
  EXPECT_EQ(pg.coefficient(jet_atom("u", {"x", "x"})), P("-2*diff(u,x,x)"));
  auto scale = prolong(parse_generator("u*D[u]", prog.decl), space, 2);
  EXPECT_EQ(pg.apply(Expr(3)), Expr());
  EXPECT_EQ(scale.apply(P("diff(u,t) - diff(u,x,x)")), P("diff(u,t) - diff(u,x,x)"));
  EXPECT_THROW(prolong(parse_generator("D[x]", prog.decl), space, 1).apply(P("diff(u,x,x)")), InsufficientOrder);
}

TEST(Prolong, UnknownCoefficient) {
  auto prog = parse_program("indep t, x; dep u(t,x); fun F1(t,x);");
  JetSpace space{prog.decl.indep, prog.decl.dep};
  auto pg = prolong(parse_generator("F1(t,x)*D[u]", prog.decl), space, 1);
  EXPECT_EQ(pg.coefficient(jet_atom("u", {"x"})), parse_expr("diff(F1(t,x),x)", prog.decl));
}

TEST(CheckSymmetry, Heat) {
  auto prog = corpus_program("heat.deq");
  DESystem sys = DESystem::from_program(prog);
  for (const char* g : {"D[x]", "D[t]", "u*D[u]", "2*t*D[t] + x*D[x]", "u*x*D[u] - 2*t*D[x]",
                        "t^2*D[t] + 1/4*(-2*u*t - u*x^2)*D[u] + t*x*D[x]"}) {
    EXPECT_TRUE(all_zero(check_symmetry(sys, parse_generator(g, prog.decl)))) << g;
  }
  auto r = check_symmetry(sys, parse_generator("u*D[x]", prog.decl));
  EXPECT_FALSE(all_zero(r));
  // u D_x: eta_x = -u_x^2, eta_t = -u_x u_t, eta_xx = -3 u_x u_xx; residual on u_xx = u_t is 2 u_x u_t.
  EXPECT_EQ(r[0], parse_expr("2*diff(u,x)*diff(u,t)", prog.decl));
}

TEST(CheckSymmetry, KleinGordon) {
  auto prog = corpus_program("kg.deq");
  DESystem sys = DESystem::from_program(prog);
  EXPECT_TRUE(all_zero(check_symmetry(sys, parse_generator("y*D[t] + t*D[y]", prog.decl))));
  EXPECT_TRUE(all_zero(check_symmetry(sys, parse_generator("z*D[x] - x*D[z]", prog.decl))));
  EXPECT_FALSE(all_zero(check_symmetry(sys, parse_generator("y*D[t] - t*D[y]", prog.decl))));
}

TEST(CheckSymmetry, Burgers) {
  auto prog = corpus_program("burgers.deq");
  DESystem sys = DESystem::from_program(prog);
  EXPECT_TRUE(all_zero(check_symmetry(
      sys, parse_generator("(u*t-x)*D[u] + (2*v*t-1)*D[v] - t^2*D[t] - t*x*D[x]", prog.decl))));
}

TEST(DeterminingSystem, HeatCount) {
  auto ds = determining_system(DESystem::from_program(corpus_program("heat.deq")));
  EXPECT_EQ(ds.eqs.size(), 9u);
}
