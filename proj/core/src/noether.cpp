#include "symkit/noether.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "symkit/linalg.hpp"

namespace symkit {

namespace {

std::vector<std::string> base_vars(const JetSpace& space) {
  std::vector<std::string> v = space.indep;
  v.insert(v.end(), space.dep.begin(), space.dep.end());
  return v;
}

Expr var_expr(const JetSpace& space, const std::string& name) { return space.is_dep(name) ? dep(name) : indep(name); }

// Monomials of total degree <= d, by degree and then lexicographically.
std::vector<Expr> monomials_upto(const std::vector<Expr>& vars, int d) {
  std::vector<Expr> out;
  std::function<void(std::size_t, int, const Expr&)> rec = [&](std::size_t from, int left, const Expr& acc) {
    if (left == 0) {
      out.push_back(acc);
      return;
    }
    for (std::size_t i = from; i < vars.size(); ++i) rec(i, left - 1, acc * vars[i]);
  };
  for (int k = 0; k <= d; ++k) rec(0, k, Expr(1));
  return out;
}

std::vector<Expr> dedupe_primitive(const std::vector<Expr>& eqs) {
  std::vector<Expr> out;
  std::set<Expr, ExprLess> seen;
  for (const auto& e : eqs) {
    Expr p = make_primitive(e);
    if (!p.is_zero() && seen.insert(p).second) out.push_back(p);
  }
  return out;
}

bool vanishes_on_shell(const Lagrangian& lag, const Expr& e) {
  if (is_zero_rational(e)) return true;
  DESystem el = euler_lagrange(lag);
  el.eqs.erase(std::remove_if(el.eqs.begin(), el.eqs.end(), [](const Expr& q) { return q.is_zero(); }), el.eqs.end());
  if (el.eqs.empty()) return false;
  try {
    OrthonomicForm form = orthonomic(el);
    return is_zero_rational(reduce_modulo(e, form));
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

Lagrangian make_lagrangian(const JetSpace& space, const Expr& L, const std::vector<std::string>& params) {
  if (max_order(L) > 1) throw Error("only first-order Lagrangians are supported");
  return Lagrangian{space, params, L};
}

Lagrangian lagrangian_from_program(const Program& prog) {
  if (!prog.lagrangian) throw Error("program has no lagrangian statement");
  return make_lagrangian(JetSpace{prog.decl.indep, prog.decl.dep}, *prog.lagrangian, prog.decl.params);
}

DESystem euler_lagrange(const Lagrangian& lag) {
  DESystem sys;
  sys.space = lag.space;
  sys.params = lag.params;
  for (const auto& u : lag.space.dep) {
    Expr e = pdiff(lag.L, dep_atom(u));
    for (const auto& x : lag.space.indep) {
      e -= total_derivative(pdiff(lag.L, jet_atom(u, {x})), x, lag.space);
    }
    sys.eqs.push_back(e);
  }
  return sys;
}

Expr divergence(const ConservedCurrent& c, const JetSpace& space) {
  Expr d;
  for (std::size_t i = 0; i < c.components.size(); ++i) d += total_derivative(c.components[i], c.order[i], space);
  return d;
}

std::string to_string(const ConservedCurrent& c) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < c.components.size(); ++i) os << (i ? ", " : "") << to_string(c.components[i]);
  os << "]";
  return os.str();
}

std::vector<std::string> gauge_unknowns(const JetSpace& space) {
  std::vector<std::string> out;
  for (const auto& x : space.indep) out.push_back("f_" + x);
  return out;
}

Expr noether_residual(const Lagrangian& lag, const Generator& g, const std::vector<Expr>& f) {
  ProlongedGenerator pg(g, lag.space, 1);
  Expr r = pg.apply(lag.L);
  Expr div;
  for (std::size_t i = 0; i < lag.space.indep.size(); ++i) div += total_derivative(g.theta[i], lag.space.indep[i], lag.space);
  r += lag.L * div;
  for (std::size_t i = 0; i < lag.space.indep.size(); ++i) r -= total_derivative(f[i], lag.space.indep[i], lag.space);
  return r;
}

DeterminingSystem noether_condition(const Lagrangian& lag) {
  DeterminingSystem ds;
  ds.space = lag.space;
  ds.params = lag.params;
  ds.vars = base_vars(lag.space);
  ds.ansatz = generic_generator(lag.space);
  ds.unknowns = generic_unknowns(lag.space);
  std::vector<Expr> f;
  for (const auto& name : gauge_unknowns(lag.space)) {
    ds.unknowns.push_back(name);
    f.push_back(fn(name, ds.vars));
  }
  Expr r = clear_denominators(noether_residual(lag, ds.ansatz, f));
  std::vector<Expr> eqs;
  for (const auto& part : split_coefficients(r, ds.unknowns)) eqs.push_back(part.coefficient);
  ds.eqs = dedupe_primitive(eqs);
  return ds;
}

ConservedCurrent noether_current(const Lagrangian& lag, const Generator& g, const std::vector<Expr>& f) {
  const auto& X = lag.space.indep;
  const auto& U = lag.space.dep;
  if (f.size() != X.size()) throw Error("need one gauge term per independent variable");
  ConservedCurrent c;
  c.order = X;
  for (std::size_t i = 0; i < X.size(); ++i) {
    Expr I = lag.L * g.theta[i] - f[i];
    for (std::size_t j = 0; j < U.size(); ++j) {
      Expr q = g.eta[j];
      for (std::size_t k = 0; k < X.size(); ++k) q -= jet(U[j], {X[k]}) * g.theta[k];
      I += pdiff(lag.L, jet_atom(U[j], {X[i]})) * q;
    }
    c.components.push_back(I);
  }
  if (!vanishes_on_shell(lag, divergence(c, lag.space))) {
    throw NotVariationalSymmetry("current is not conserved: " + to_string(g, lag.space));
  }
  return c;
}

std::vector<NoetherSymmetry> noether_solve(const Lagrangian& lag, int degree, const SolverParams& p) {
  if (degree < 0) throw Error("degree must be non-negative");
  const std::size_t m = lag.space.indep.size(), n = lag.space.dep.size();
  std::vector<Expr> vars;
  for (const auto& v : base_vars(lag.space)) vars.push_back(var_expr(lag.space, v));
  auto monos = monomials_upto(vars, degree);
  const std::size_t K = monos.size(), slots = 2 * m + n, gen_coords = (m + n) * K;
  // Slots: theta_1..theta_m, eta_1..eta_n, f_1..f_m; one constant per monomial.
  std::vector<std::string> names;
  std::vector<Expr> slot_value(slots);
  for (std::size_t s = 0; s < slots; ++s) {
    for (std::size_t k = 0; k < K; ++k) {
      names.push_back("_n" + std::to_string(s * K + k + 1));
      slot_value[s] += fn(names.back(), {}) * monos[k];
    }
  }
  Generator g;
  g.theta.assign(slot_value.begin(), slot_value.begin() + static_cast<std::ptrdiff_t>(m));
  g.eta.assign(slot_value.begin() + static_cast<std::ptrdiff_t>(m), slot_value.begin() + static_cast<std::ptrdiff_t>(m + n));
  std::vector<Expr> f(slot_value.begin() + static_cast<std::ptrdiff_t>(m + n), slot_value.end());
  Expr r = clear_denominators(noether_residual(lag, g, f));

  // The residual must vanish identically: collect coefficients of each
  // monomial in x, u and the jets.
  std::set<std::string> unknown_names(names.begin(), names.end());
  std::map<Monomial, Expr, MonomialLess> groups;
  for (const auto& t : r.terms()) {
    Monomial key;
    Expr c(t.coeff);
    for (const auto& fac : t.mono) {
      bool unknown = fac.atom->kind == AtomKind::Fn && unknown_names.count(fac.atom->name);
      bool param = fac.atom->kind == AtomKind::Param;
      if (unknown || param) {
        c *= pow(Expr::from_atom(fac.atom), fac.exp);
      } else {
        key.push_back(fac);
      }
    }
    groups[key] += c;
  }
  LinearSystem ls;
  ls.vars = base_vars(lag.space);
  ls.dep_vars = lag.space.dep;
  ls.params = lag.params;
  for (const auto& nm : names) ls.unknowns.push_back({nm, {}});
  std::vector<Expr> eqs;
  for (const auto& [key, c] : groups) eqs.push_back(c);
  ls.eqs = dedupe_primitive(eqs);
  SolutionState st = solve_linear(ls, p);
  LinearAssembly sol = assemble_linear(st, names);

  std::vector<std::vector<Expr>> coords;
  for (const auto& b : sol.basis) {
    std::vector<Expr> v;
    for (const auto& nm : names) v.push_back(b.at(nm));
    coords.push_back(v);
  }
  // With rational coordinates: row-reduce so each generator has its own
  // pivot, then reduce the gauge part modulo the identically conserved
  // gauge-only solutions.
  bool rational = std::all_of(coords.begin(), coords.end(), [](const std::vector<Expr>& v) {
    return std::all_of(v.begin(), v.end(), [](const Expr& e) { return e.is_zero() || e.as_rational(); });
  });
  auto is_trivial = [&](const std::vector<Expr>& v) {
    return std::all_of(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(gen_coords), [](const Expr& e) { return e.is_zero(); });
  };
  std::vector<std::vector<Expr>> kept;
  if (rational && !coords.empty()) {
    std::vector<Vec> rows;
    for (const auto& v : coords) {
      Vec q;
      for (const auto& e : v) q.push_back(e.is_zero() ? Rational(0) : *e.as_rational());
      rows.push_back(q);
    }
    Matrix A = Matrix::from_rows(rows);
    auto piv = rref(A);
    std::vector<Vec> gens, gauge;
    for (std::size_t i = 0; i < piv.size(); ++i) (piv[i] < gen_coords ? gens : gauge).push_back(A.row(i));
    if (!gauge.empty()) {
      Matrix G = Matrix::from_rows(gauge);
      auto gp = rref(G);
      for (auto& v : gens) {
        for (std::size_t i = 0; i < gp.size(); ++i) {
          Rational c = v[gp[i]];
          if (c == 0) continue;
          for (std::size_t k = 0; k < v.size(); ++k) v[k] -= c * G(i, k);
        }
      }
    }
    for (const auto& v : gens) {
      std::vector<Expr> e;
      for (const auto& q : v) e.push_back(Expr(q));
      kept.push_back(e);
    }
  } else {
    for (const auto& v : coords) {
      if (!is_trivial(v)) kept.push_back(v);
    }
  }

  std::vector<NoetherSymmetry> out;
  for (const auto& v : kept) {
    std::vector<Expr> val(slots);
    for (std::size_t s = 0; s < slots; ++s) {
      for (std::size_t k = 0; k < K; ++k) val[s] += v[s * K + k] * monos[k];
    }
    NoetherSymmetry ns;
    ns.gen.theta.assign(val.begin(), val.begin() + static_cast<std::ptrdiff_t>(m));
    ns.gen.eta.assign(val.begin() + static_cast<std::ptrdiff_t>(m), val.begin() + static_cast<std::ptrdiff_t>(m + n));
    ns.f.assign(val.begin() + static_cast<std::ptrdiff_t>(m + n), val.end());
    try {
      ns.current = noether_current(lag, ns.gen, ns.f);
    } catch (const NotVariationalSymmetry&) {
      continue;  // only verified currents are returned
    }
    out.push_back(ns);
  }
  return out;
}

}  // namespace symkit
