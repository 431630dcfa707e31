#include <gtest/gtest.h>

#include "symkit/liealg.hpp"
#include "symkit/qp.hpp"
#include "test_util.hpp"

using namespace symkit;

namespace {

QPSystem make_qp(const std::vector<std::string>& vars, const std::vector<std::string>& params,
                 const std::vector<std::string>& rhs) {
  Declarations d;
  d.indep = {"t"};
  d.dep = vars;
  d.params = params;
  std::vector<Expr> r;
  for (const auto& s : rhs) r.push_back(parse_expr(s, d));
  return qp_from_equations(vars, params, r);
}

Expr X(const QPSystem& sys, const std::string& s) { return parse_expr(s, sys.decl()); }

// Chain rule written out independently of QPSystem::time_derivative.
Expr ddt(const QPSystem& sys, const std::vector<std::string>& rhs, const Expr& e) {
  Expr out = pdiff(e, indep_atom(sys.time));
  for (std::size_t k = 0; k < sys.n(); ++k) out += pdiff(e, dep_atom(sys.vars[k])) * X(sys, rhs[k]);
  return out;
}

// [a, b] through the action on a generic function.
Generator bracket_oracle(const Generator& a, const Generator& b, const JetSpace& space) {
  auto vars = generator_vars(space);
  Expr f = fn("f", vars);
  Expr lhs = apply_generator(a, space, apply_generator(b, space, f)) - apply_generator(b, space, apply_generator(a, space, f));
  Generator out = zero_generator(space);
  for (const auto& v : vars) component(out, space, v) = coefficient(lhs, fn_atom("f", vars, {v}), 1);
  return out;
}

Expr lambda_y(const LVForm& lv, const std::vector<Expr>& lambda) {
  Expr l = lv.linear(lambda);
  if (!lv.constant) return l;
  Rules r;
  r.emplace(dep_atom(lv.y[*lv.constant]), Expr(1));
  return substitute(l, r);
}

const std::vector<std::string> kPredPrey = {"x*(a - b*y)", "y*(-c + d*x)"};
const std::vector<std::string> kPredPreyNum = {"x*(2 - y)", "y*(-1 + x)"};
const std::vector<std::string> kConserving = {"x1*x2", "-x1*x2"};

}  // namespace

TEST(QPSystem, ReproducesEquations) {
  auto sys = make_qp({"x", "y"}, {"a", "b", "c", "d"}, kPredPrey);
  ASSERT_EQ(sys.n(), 2u);
  ASSERT_EQ(sys.m(), 3u);
  EXPECT_EQ(sys.B[0], (Vec{0, 1}));
  EXPECT_EQ(sys.B[1], (Vec{1, 0}));
  EXPECT_EQ(sys.constant_monomial(), std::optional<std::size_t>(2));
  auto rhs = sys.rhs();
  EXPECT_EQ(rhs[0], X(sys, kPredPrey[0]));
  EXPECT_EQ(rhs[1], X(sys, kPredPrey[1]));
}

TEST(QPSystem, RejectsNonQuasiPolynomial) {
  EXPECT_THROW(make_qp({"x"}, {}, {"sin(x)"}), Error);
  EXPECT_THROW(make_qp({"x"}, {}, {"x*t"}), Error);
}

TEST(QPSystem, FromProgramAndJson) {
  auto prog = parse_program("indep t; dep x(t), y(t); param a; eq diff(x,t) = a*x*y^(1/2); eq diff(y,t) = -y;");
  auto sys = qp_from_program(prog);
  EXPECT_EQ(sys.rhs()[0], X(sys, "a*x*y^(1/2)"));
  auto back = qp_from_json(to_json(sys));
  EXPECT_EQ(back.rhs(), sys.rhs());
  EXPECT_EQ(back.B, sys.B);
}

TEST(ToLV, PredatorPreyOracle) {
  auto sys = make_qp({"x", "y"}, {"a", "b", "c", "d"}, kPredPrey);
  auto lv = to_lv(sys);
  ASSERT_EQ(lv.m(), 3u);
  EXPECT_EQ(lv.padded, 0u);
  ASSERT_TRUE(lv.constant);
  ASSERT_TRUE(lv.back);
  // d/dt y_i(x) must equal y_i sum_j M_ij y_j evaluated at y(x).
  for (std::size_t i = 0; i < lv.m(); ++i) {
    EXPECT_TRUE(is_zero_rational(ddt(sys, kPredPrey, lv.y_in_x(i)) - lv.to_x(lv.lv_rhs(i)))) << i;
  }
  for (const auto& e : lv.M[2]) EXPECT_TRUE(e.is_zero());
  EXPECT_EQ(lv.M[0][2], X(sys, "-c"));
  EXPECT_EQ(lv.M[1][0], X(sys, "-b"));
}

TEST(ToLV, SquareOfX) {
  auto lv = to_lv(make_qp({"x"}, {}, {"x^2"}));
  ASSERT_EQ(lv.m(), 1u);
  EXPECT_EQ(lv.M[0][0], Expr(1));
  EXPECT_FALSE(lv.constant);
}

TEST(ToLV, IdentityLeavesEquations) {
  auto sys = make_qp({"x1", "x2"}, {}, {"x1*(x1 + 2*x2)", "-x2*x1"});
  auto lv = to_lv(sys);
  ASSERT_EQ(lv.m(), 2u);
  for (std::size_t i = 0; i < 2; ++i) EXPECT_EQ(lv.to_x(lv.lv_rhs(i)), sys.rhs()[i]);
}

TEST(ToLV, PadsRankDeficientExponents) {
  // Only x*y occurs; x is added so the change of variables can be inverted.
  std::vector<std::string> rhs = {"x^2*y", "-x*y^2"};
  auto sys = make_qp({"x", "y"}, {}, rhs);
  auto lv = to_lv(sys);
  EXPECT_EQ(lv.padded, 1u);
  ASSERT_TRUE(lv.back);
  for (std::size_t i = 0; i < lv.m(); ++i) {
    EXPECT_TRUE(is_zero_rational(ddt(sys, rhs, lv.y_in_x(i)) - lv.to_x(lv.lv_rhs(i))));
  }
}

TEST(Darboux, CoordinatesAreSemiInvariants) {
  auto sys = make_qp({"x", "y"}, {"a", "b", "c", "d"}, kPredPrey);
  auto lv = to_lv(sys);
  auto semis = darboux(lv, 1);
  bool fx = false, fy = false;
  for (const auto& s : semis) {
    Expr l = lv.to_x(s.lambda_y);
    if (s.f_x == X(sys, "x")) fx = (l == X(sys, "a - b*y"));
    if (s.f_x == X(sys, "y")) fy = (l == X(sys, "-c + d*x"));
    // f' = lambda f, checked in the original variables.
    EXPECT_TRUE(is_zero_rational(ddt(sys, kPredPrey, s.f_x) - l * s.f_x)) << to_string(s.f_x);
  }
  EXPECT_TRUE(fx);
  EXPECT_TRUE(fy);
}

TEST(Darboux, FindsConservedSum) {
  auto sys = make_qp({"x1", "x2"}, {}, kConserving);
  auto lv = to_lv(sys);
  auto semis = darboux(lv, 2);
  bool found = false;
  Expr target = lv.y_var(0) + lv.y_var(1);
  for (const auto& s : semis) {
    EXPECT_TRUE(verify_semi_invariant(lv, s));
    bool zero = std::all_of(s.lambda.begin(), s.lambda.end(), [](const Expr& e) { return e.is_zero(); });
    if (zero && s.f_y == target) found = true;
  }
  EXPECT_TRUE(found);
}

TEST(Darboux, EverySemiInvariantVerifies) {
  for (const auto& rhs : {kPredPreyNum, kConserving}) {
    auto sys = make_qp(rhs == kConserving ? std::vector<std::string>{"x1", "x2"} : std::vector<std::string>{"x", "y"},
                       {}, rhs);
    auto lv = to_lv(sys);
    for (const auto& s : darboux(lv, 3)) {
      Expr l = lv.to_x(s.lambda_y);
      EXPECT_TRUE(is_zero_rational(ddt(sys, rhs, s.f_x) - l * s.f_x)) << to_string(s.f_x);
    }
  }
}

TEST(Darboux, ProductClosure) {
  auto sys = make_qp({"x", "y"}, {}, kPredPreyNum);
  auto lv = to_lv(sys);
  auto semis = darboux(lv, 2);
  ASSERT_GE(semis.size(), 2u);
  for (std::size_t a = 0; a < semis.size(); ++a) {
    for (std::size_t b = a; b < semis.size(); ++b) {
      SemiInvariant p;
      p.f = semis[a].f * semis[b].f;
      p.lambda.resize(lv.m());
      for (std::size_t j = 0; j < lv.m(); ++j) p.lambda[j] = semis[a].lambda[j] + semis[b].lambda[j];
      EXPECT_TRUE(verify_semi_invariant(lv, p));
    }
  }
}

TEST(Darboux, HomogeneousComponents) {
  // Pure LV: every returned f is homogeneous, and each homogeneous part is a
  // semi-invariant with the same eigenvalue.
  auto sys = make_qp({"x1", "x2", "x3"}, {}, {"x1*(x2 - x3)", "x2*(x3 - x1)", "x3*(x1 - x2)"});
  auto lv = to_lv(sys);
  auto semis = darboux(lv, 2);
  ASSERT_FALSE(semis.empty());
  for (const auto& s : semis) {
    std::map<Rational, Expr> parts;
    for (const auto& t : s.f.terms()) {
      Rational deg = 0;
      for (const auto& f : t.mono) deg += f.exp;
      parts[deg] += Expr::from_terms({t});
    }
    for (const auto& [deg, part] : parts) {
      SemiInvariant c = s;
      c.f = part;
      EXPECT_TRUE(verify_semi_invariant(lv, c)) << to_string(part);
    }
  }
}

TEST(FirstIntegrals, ConservedSum) {
  auto sys = make_qp({"x1", "x2"}, {}, kConserving);
  auto ints = qp_first_integrals(sys, 2);
  bool found = false;
  for (const auto& I : ints) {
    EXPECT_TRUE(is_zero_rational(ddt(sys, kConserving, I.value()))) << to_string(I.value());
    if (I.value() == X(sys, "x1 + x2")) found = true;
  }
  EXPECT_TRUE(found);
}

TEST(FirstIntegrals, ExponentialWeighting) {
  auto sys = make_qp({"x"}, {"a"}, {"a*x"});
  auto ints = qp_first_integrals(sys, 1);
  ASSERT_EQ(ints.size(), 1u);
  EXPECT_EQ(ints[0].value(), X(sys, "x*exp(-a*t)"));
  EXPECT_TRUE(is_zero_rational(ddt(sys, {"a*x"}, ints[0].value())));
}

TEST(FirstIntegrals, ExactXiOutcome) {
  std::vector<std::string> rhs = {"x1*(1 - x2)", "x2*(x1 - 1)"};
  auto sys = make_qp({"x1", "x2"}, {}, rhs);
  auto lv = to_lv(sys);
  // Semi-invariants x1 and x2 with the stated eigenvalues.
  auto semis = darboux(lv, 1);
  std::map<std::string, Expr> lam;
  for (const auto& s : semis) lam[to_string(s.f_x)] = lv.to_x(s.lambda_y);
  EXPECT_EQ(lam.at("x1"), X(sys, "1 - x2"));
  EXPECT_EQ(lam.at("x2"), X(sys, "x1 - 1"));
  // By hand: y = (x2, x1, 1), M restricted to the first two is [[0,1],[-1,0]].
  // For f = x2, xi M = -(0, 1) gives xi = (-1, 0), so y^xi f = 1: trivial.
  // M is invertible, so xi M = 0 has only xi = 0. Nothing survives.
  Matrix M = lv.rational_M();
  EXPECT_EQ(M(0, 1), 1);
  EXPECT_EQ(M(1, 0), -1);
  EXPECT_EQ(M(0, 0), 0);
  EXPECT_TRUE(qp_first_integrals(sys, 1).empty());
}

TEST(FirstIntegrals, PredatorPreyHasNoQuasiPolynomialIntegral) {
  auto sys = make_qp({"x", "y"}, {}, kPredPreyNum);
  for (const auto& I : qp_first_integrals(sys, 2)) {
    EXPECT_TRUE(is_zero_rational(ddt(sys, kPredPreyNum, I.value()))) << to_string(I.value());
  }
}

TEST(LogIntegrals, PredatorPreyNumeric) {
  auto sys = make_qp({"x", "y"}, {}, kPredPreyNum);
  auto ints = log_integrals(sys, 1);
  ASSERT_EQ(ints.size(), 1u);
  Expr expected = X(sys, "x + y - ln(x) - 2*ln(y)");
  auto q = coefficient(ints[0].numerator, dep_atom("x"), 1).as_rational();
  ASSERT_TRUE(q);
  EXPECT_EQ(ints[0].numerator, Expr(*q) * expected);
  EXPECT_TRUE(is_zero_rational(ddt(sys, kPredPreyNum, expected)));
  EXPECT_EQ(ints[0].kind, IntegralKind::Log);
}

TEST(LogIntegrals, PredatorPreySymbolic) {
  auto sys = make_qp({"x", "y"}, {"a", "b", "c", "d"}, kPredPrey);
  auto ints = log_integrals(sys, 1);
  ASSERT_EQ(ints.size(), 1u);
  Expr expected = X(sys, "d*x + b*y - c*ln(x) - a*ln(y)");
  Expr I = ints[0].numerator;
  // I is a parameter multiple of the expected integral.
  EXPECT_EQ(I * X(sys, "d"), coefficient(I, dep_atom("x"), 1) * expected);
  EXPECT_TRUE(is_zero_rational(ddt(sys, kPredPrey, expected)));
}

TEST(LogIntegrals, TrivialCases) {
  auto still = make_qp({"x"}, {}, {"0"});
  auto ints = log_integrals(still, 1);
  ASSERT_EQ(ints.size(), 2u);
  std::set<std::string> got;
  for (const auto& I : ints) got.insert(to_string(I.numerator));
  EXPECT_TRUE(got.count("x"));
  EXPECT_TRUE(got.count("ln(x)"));
  EXPECT_TRUE(log_integrals(make_qp({"x"}, {}, {"x"}), 2).empty());
}

TEST(LogIntegrals, MixedAnsatzVerifies) {
  auto sys = make_qp({"x", "y"}, {}, kPredPreyNum);
  auto ints = log_integrals(sys, 1, true);
  ASSERT_FALSE(ints.empty());
  for (const auto& I : ints) EXPECT_TRUE(is_zero_rational(ddt(sys, kPredPreyNum, I.numerator)));
}

TEST(Symmetries, FlowIsItsOwnSymmetry) {
  auto sys = make_qp({"x1", "x2"}, {}, kConserving);
  auto lv = to_lv(sys);
  auto syms = qp_symmetries(sys, 2);
  std::vector<Generator> zero_lambda;
  for (const auto& s : syms) {
    if (lambda_y(lv, s.lambda).is_zero()) zero_lambda.push_back(s.T);
  }
  auto with_flow = zero_lambda;
  with_flow.push_back(lv.flow());
  EXPECT_EQ(generator_rank(with_flow), generator_rank(zero_lambda));
}

TEST(Symmetries, ScalingOnSquare) {
  auto sys = make_qp({"x"}, {}, {"x^2"});
  auto lv = to_lv(sys);
  bool found = false;
  for (const auto& s : qp_symmetries(sys, 2)) {
    // [F, T] = lambda T against the operator oracle.
    Generator br = bracket_oracle(lv.flow(), s.T, lv.space());
    EXPECT_TRUE(is_zero_rational(br.eta[0] - lambda_y(lv, s.lambda) * s.T.eta[0]));
    if (s.T.eta[0] == lv.y_var(0)) {
      found = true;
      EXPECT_EQ(lambda_y(lv, s.lambda), -lv.y_var(0));
      ASSERT_TRUE(s.G);
      EXPECT_EQ(s.G->eta[0], pow(lv.y_var(0), 2));
      ASSERT_TRUE(s.G_x);
      EXPECT_EQ(s.G_x->eta[0], X(sys, "x^2"));
    }
  }
  EXPECT_TRUE(found);
}

TEST(Symmetries, TranslationOnLinearSystem) {
  auto sys = make_qp({"x"}, {}, {"2*x"});
  auto lv = to_lv(sys);
  bool found = false;
  for (const auto& s : qp_symmetries(sys, 1)) {
    Generator br = bracket_oracle(lv.flow(), s.T, lv.space());
    for (std::size_t i = 0; i < lv.m(); ++i) {
      Rules one;
      one.emplace(dep_atom(lv.y[*lv.constant]), Expr(1));
      EXPECT_TRUE(is_zero_rational(substitute(br.eta[i], one) - lambda_y(lv, s.lambda) * s.T.eta[i]));
    }
    if (s.T.eta[0] == Expr(1)) {
      found = true;
      EXPECT_EQ(lambda_y(lv, s.lambda), Expr(-2));
      ASSERT_TRUE(s.G_x);
      EXPECT_EQ(s.G_x->eta[0], X(sys, "exp(2*t)"));
    }
  }
  EXPECT_TRUE(found);
}

TEST(Symmetries, PushedForwardFieldsCommute) {
  auto sys = make_qp({"x", "y"}, {}, kPredPreyNum);
  JetSpace xs = sys.space();
  Generator F = zero_generator(xs);
  F.eta = sys.rhs();
  for (const auto& s : qp_symmetries(sys, 1)) {
    if (!s.G_x) continue;
    Generator c = bracket_oracle(F, *s.G_x, xs);
    for (std::size_t k = 0; k < 2; ++k) {
      EXPECT_TRUE(is_zero_rational(c.eta[k] + pdiff(s.G_x->eta[k], indep_atom("t"))));
    }
  }
}

TEST(FlowDecomposition, ProportionalGenerators) {
  auto sys = make_qp({"x1", "x2"}, {}, kConserving);
  auto lv = to_lv(sys);
  Generator g = zero_generator(lv.space());
  g.eta = {lv.y_var(0), Expr()};
  Generator target = g;
  target.eta[0] = target.eta[0] * Expr(3);
  auto ints = flow_decomposition_integrals({g}, target, lv.space(), lv.flow());
  ASSERT_EQ(ints.size(), 1u);
  EXPECT_EQ(ints[0].value(), Expr(3));
}

TEST(FlowDecomposition, RecoversConservedSum) {
  auto sys = make_qp({"x1", "x2"}, {}, kConserving);
  auto lv = to_lv(sys);
  Generator F = lv.flow();
  Generator S = zero_generator(lv.space());
  S.eta = {lv.y_var(0), lv.y_var(1)};
  Generator target = F;
  Expr sum = lv.y_var(0) + lv.y_var(1);
  for (auto& e : target.eta) e = e * sum;
  auto ints = flow_decomposition_integrals({F, S}, target, lv.space(), F);
  bool found = false;
  for (const auto& I : ints) {
    if (I.value() == sum) found = true;
  }
  EXPECT_TRUE(found);
}

TEST(FlowDecomposition, IndependentGenerators) {
  auto sys = make_qp({"x1", "x2"}, {}, kConserving);
  auto lv = to_lv(sys);
  Generator a = zero_generator(lv.space()), b = zero_generator(lv.space());
  a.eta[0] = Expr(1);
  b.eta[1] = Expr(1);
  EXPECT_THROW(flow_decomposition_integrals({a}, b, lv.space(), lv.flow()), NoDecomposition);
}
