#include <gtest/gtest.h>

#include "symkit/expr.hpp"
#include "symkit/parse.hpp"
#include "symkit/serialize.hpp"

using namespace symkit;

namespace {

Declarations decls() {
  return parse_program("indep x, t; dep u(x,t), v(x,t); param a, b; fun f(x,t), g(x), h(x);").decl;
}

Expr P(const std::string& s) { return parse_expr(s, decls()); }

}  // namespace

TEST(Parse, JetNotation) {
  Expr e = P("diff(u,t) - diff(u,x,x)");
  EXPECT_EQ(e.kind(), NodeKind::Sum);
  EXPECT_EQ(e, jet("u", {"t"}) - jet("u", {"x", "x"}));
  EXPECT_EQ(P("diff(u,x,2)"), jet("u", {"x", "x"}));
  EXPECT_EQ(P("diff(u,x,t)"), P("diff(u,t,x)"));
}

TEST(Parse, Canonicalization) {
  Expr e = P("x*0 + u");
  EXPECT_EQ(e.kind(), NodeKind::DepVar);
  EXPECT_EQ(P("0.25*x"), P("x/4"));
}

TEST(Parse, PartialDerivOfUnknown) {
  Expr e = P("diff(f(x,t),x)");
  EXPECT_EQ(e.kind(), NodeKind::PartialDeriv);
  EXPECT_EQ(e, fn("f", {"x", "t"}, {"x"}));
}

TEST(Parse, ErrorsCarryPosition) {
  try {
    P("2*t*D... ");
    FAIL();
  } catch (const ParseError& err) {
    EXPECT_EQ(err.position(), 5u);
  }
  EXPECT_THROW(P("q + 1"), ParseError);
  EXPECT_THROW(P("(x + 1"), ParseError);
  EXPECT_THROW(parse_program("indep x; indep x;"), ParseError);
}

TEST(Normalize, ExpandsProducts) {
  EXPECT_EQ(P("(x+1)*(x-1)"), P("x^2 - 1"));
  EXPECT_EQ(P("diff(u,x) + diff(u,x)"), P("2*diff(u,x)"));
  Expr e = P("exp(x)*exp(x)");
  EXPECT_EQ(e.kind(), NodeKind::Power);
  EXPECT_EQ(to_string(e), "exp(x)^2");
  EXPECT_EQ(P("exp(x)*exp(-x)"), Expr(1));
  EXPECT_EQ(P("(x+1)^(1/2)*(x+1)^(1/2)"), P("x+1"));
  EXPECT_EQ(P("sqrt(4*x^2)"), P("2*x"));
}

TEST(Pdiff, Examples) {
  EXPECT_EQ(pdiff(P("x^2*diff(u,x)"), indep("x")), P("2*x*diff(u,x)"));
  EXPECT_EQ(pdiff(P("f(x,t)*u"), dep("u")), P("f(x,t)"));
  EXPECT_EQ(pdiff(P("ln(x)"), indep("x")), P("x^(-1)"));
  EXPECT_EQ(pdiff(P("sin(a*x)"), indep("x")), P("a*cos(a*x)"));
  EXPECT_EQ(pdiff(P("(x^2+1)^(1/2)"), indep("x")), P("x*(x^2+1)^(-1/2)"));
  EXPECT_EQ(pdiff(P("diff(u,x)^2"), jet("u", {"x"})), P("2*diff(u,x)"));
}

TEST(Substitute, Examples) {
  Rules r{{jet_atom("u", {"t"}), jet("u", {"x", "x"})}};
  EXPECT_EQ(substitute(P("diff(u,t) + u*v"), r), P("diff(u,x,x) + u*v"));
  EXPECT_EQ(substitute(P("x+t"), {}), P("x+t"));
  Rules r2{{fn_atom("f", {"x", "t"}), P("x*t")}};
  EXPECT_EQ(substitute(P("f(x,t)"), r2), P("x*t"));
  EXPECT_EQ(substitute_function(P("diff(f(x,t),x) + f(x,t)"), "f", P("x^2*t")), P("2*x*t + x^2*t"));
  Rules r3{{indep_atom("x"), P("2*t")}};
  EXPECT_EQ(substitute(P("exp(x) + x"), r3), P("exp(2*t) + 2*t"));
}

TEST(Split, Examples) {
  Expr e = P("diff(u,x)*diff(f(x,t),t) + diff(u,x)*g(x) + h(x)");
  auto parts = split_coefficients(e, {"f", "g", "h"});
  ASSERT_EQ(parts.size(), 2u);
  EXPECT_EQ(monomial_expr(parts[0].monomial), jet("u", {"x"}));
  EXPECT_EQ(parts[0].coefficient, P("diff(f(x,t),t) + g(x)"));
  EXPECT_TRUE(parts[1].monomial.empty());
  EXPECT_EQ(parts[1].coefficient, P("h(x)"));
  EXPECT_TRUE(split_coefficients(Expr(), {}).empty());
  EXPECT_THROW(split_coefficients(P("exp(diff(u,x))*f(x,t)"), {"f"}), NonPolynomial);
}

TEST(Print, RoundTrip) {
  const char* cases[] = {"diff(u,t) - diff(u,x,x)", "1/2*x^2*u - 3", "exp(x)^(-1) + sin(a*t)",
                         "(x^2 + 1)^(1/2)*diff(f(x,t),x,t)", "x^(-2)*u + ln(x)", "-D[u]*t + x*D[x]"};
  for (const char* c : cases) {
    Expr e = P(c);
    EXPECT_EQ(P(to_string(e)), e) << c << " -> " << to_string(e);
  }
}

TEST(Json, NestedArrays) {
  auto j = to_json(P("diff(u,x,x) + 2*t"));
  EXPECT_EQ(j[0], "Sum");
  EXPECT_EQ(j.dump(), to_json(P("2*t + diff(u,x,x)")).dump());
}
