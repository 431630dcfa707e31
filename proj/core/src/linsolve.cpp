#include "symkit/linsolve.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <set>

#include "symkit/liealg.hpp"

namespace symkit {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

bool is_compound(const Atom& a) { return a->kind == AtomKind::Elem || a->kind == AtomKind::Pow; }

bool is_subset(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  for (const auto& x : a) {
    if (!contains(b, x)) return false;
  }
  return true;
}

// Variables (not parameters) an expression depends on, including through
// unknown-function arguments.
std::set<std::string> variables_of(const SolutionState& st, const Expr& e) {
  std::set<std::string> out;
  for (const auto& v : free_variables(e)) {
    if (contains(st.vars, v)) out.insert(v);
  }
  return out;
}

// Unknown atoms of a linear equation, or nullopt when the equation is not
// linear in the unknowns.
std::optional<std::vector<Atom>> linear_unknowns(const SolutionState& st, const Expr& e) {
  std::set<Atom, AtomLess> found;
  for (const auto& t : e.terms()) {
    int count = 0;
    for (const auto& f : t.mono) {
      if (st.is_unknown_atom(f.atom)) {
        if (f.exp != 1) return std::nullopt;
        ++count;
        found.insert(f.atom);
      } else if (is_compound(f.atom) && st.involves_unknown(f.atom->inner)) {
        return std::nullopt;
      }
    }
    if (count > 1) return std::nullopt;
  }
  return std::vector<Atom>(found.begin(), found.end());
}

std::size_t unknown_order(const SolutionState& st, const Expr& e) {
  std::size_t k = 0;
  for_each_atom(e, [&](const Atom& a) {
    if (st.is_unknown_atom(a)) k = std::max(k, a->index.size());
  });
  return k;
}

// Equations ordered by "simplest first": fewest terms, then lowest order.
std::vector<std::size_t> by_simplicity(const SolutionState& st, std::size_t max_terms) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < st.eqs.size(); ++i) {
    if (st.eqs[i].size() <= max_terms) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (st.eqs[a].size() != st.eqs[b].size()) return st.eqs[a].size() < st.eqs[b].size();
    return unknown_order(st, st.eqs[a]) < unknown_order(st, st.eqs[b]);
  });
  return idx;
}

// Divides out factors shared by every term that cannot vanish identically:
// powers of variables and parameters, and exponentials.
Expr strip_common_factors(const SolutionState& st, const Expr& e) {
  if (e.size() == 0) return e;
  std::map<Atom, Rational, AtomLess> common;
  for (const auto& f : e.terms()[0].mono) {
    if (!st.is_unknown_atom(f.atom) && f.atom->kind != AtomKind::Fn) common.emplace(f.atom, f.exp);
  }
  for (const auto& t : e.terms()) {
    std::map<Atom, Rational, AtomLess> next;
    for (const auto& f : t.mono) {
      auto it = common.find(f.atom);
      if (it != common.end()) next.emplace(f.atom, std::min(it->second, f.exp));
    }
    common = std::move(next);
  }
  Expr divisor(1);
  for (const auto& [a, k] : common) {
    bool is_exp = a->kind == AtomKind::Elem && a->tag == ElemTag::Exp;
    bool is_symbol = a->kind == AtomKind::Indep || a->kind == AtomKind::Dep || a->kind == AtomKind::Param;
    if ((is_exp && is_integer(k)) || (is_symbol && k > 0 && is_integer(k))) divisor *= pow(Expr::from_atom(a), k);
  }
  return divisor == Expr(1) ? e : e * pow(divisor, Rational(-1));
}

void normalize_equations(SolutionState& st) {
  std::vector<Expr> out;
  std::set<Expr, ExprLess> seen;
  for (const auto& e : st.eqs) {
    Expr p = make_primitive(strip_common_factors(st, make_primitive(e)));
    if (p.is_zero()) continue;
    if (seen.insert(p).second) out.push_back(p);
  }
  st.eqs = std::move(out);
}

Expr fresh_function(SolutionState& st, const std::vector<std::string>& args) {
  std::string name;
  if (args.empty()) {
    name = "_C" + std::to_string(st.next_constant++);
  } else {
    name = "_F" + std::to_string(st.next_function++);
  }
  st.live[name] = args;
  return fn(name, args);
}

std::vector<std::string> without(const std::vector<std::string>& args, const std::string& v) {
  std::vector<std::string> out;
  for (const auto& a : args) {
    if (a != v) out.push_back(a);
  }
  return out;
}

std::size_t occurrences(const SolutionState& st, const std::string& name) {
  std::size_t n = 0;
  for (const auto& e : st.eqs) {
    if (contains_atom(e, [&](const Atom& a) { return a->kind == AtomKind::Fn && a->name == name; })) ++n;
  }
  return n;
}

}  // namespace

SolverParams default_solver_params() {
  SolverParams p;
  if (const char* env = std::getenv("SYMKIT_BUDGET")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v > 0 && v < 100000000) p.budget = static_cast<int>(v);
  }
  return p;
}

LinearSystem to_linear_system(const DeterminingSystem& ds) {
  LinearSystem sys;
  sys.vars = ds.vars;
  sys.dep_vars = ds.space.dep;
  sys.params = ds.params;
  for (const auto& u : ds.unknowns) sys.unknowns.push_back({u, ds.vars});
  sys.eqs = ds.eqs;
  return sys;
}

bool SolutionState::is_unknown_atom(const Atom& a) const {
  return a->kind == AtomKind::Fn && live.count(a->name) != 0;
}

bool SolutionState::involves_unknown(const Expr& e) const {
  return contains_atom(e, [&](const Atom& a) { return is_unknown_atom(a); });
}

Expr SolutionState::var(const std::string& name) const {
  return contains(dep_vars, name) ? dep(name) : indep(name);
}

SolutionState make_state(const LinearSystem& sys) {
  SolutionState st;
  st.vars = sys.vars;
  st.dep_vars = sys.dep_vars;
  st.params = sys.params;
  for (const auto& [name, args] : sys.unknowns) {
    st.original.push_back(name);
    st.live[name] = args;
  }
  st.eqs = sys.eqs;
  normalize_equations(st);
  return st;
}

namespace {

void substitute_everywhere(SolutionState& st, const Substitution& s) {
  st.live.erase(s.name);
  for (auto& e : st.eqs) e = substitute_function(e, s.name, s.value);
  for (auto& [n, v] : st.found) v = substitute_function(v, s.name, s.value);
  if (contains(st.original, s.name)) st.found[s.name] = s.value;
  normalize_equations(st);
  st.trace.push_back(s.name + " = " + to_string(s.value));
}

// Two introduced functions g, h with equal arguments that occur everywhere
// only through g + h: h is dropped.
bool merge_redundant_functions(SolutionState& st) {
  std::vector<std::string> names;
  for (const auto& [n, args] : st.live) {
    if (!contains(st.original, n)) names.push_back(n);
  }
  std::vector<const Expr*> all;
  for (const auto& e : st.eqs) all.push_back(&e);
  for (const auto& [n, v] : st.found) all.push_back(&v);
  for (std::size_t i = 0; i < names.size(); ++i) {
    for (std::size_t j = i + 1; j < names.size(); ++j) {
      const auto& args = st.live.at(names[i]);
      if (st.live.at(names[j]) != args) continue;
      Expr probe = fn("__probe", args);
      bool invariant = true, present = false;
      for (const Expr* e : all) {
        bool has_g = contains_atom(*e, [&](const Atom& a) { return a->kind == AtomKind::Fn && a->name == names[i]; });
        bool has_h = contains_atom(*e, [&](const Atom& a) { return a->kind == AtomKind::Fn && a->name == names[j]; });
        if (!has_g && !has_h) continue;
        present = true;
        if (has_g != has_h) {
          invariant = false;
          break;
        }
        Expr shifted = substitute_function(substitute_function(*e, names[i], fn(names[i], args) + probe), names[j],
                                           fn(names[j], args) - probe);
        if (shifted != *e) {
          invariant = false;
          break;
        }
      }
      if (invariant && present) {
        substitute_everywhere(st, {names[j], Expr()});
        return true;
      }
    }
  }
  return false;
}

}  // namespace

void apply_substitution(SolutionState& st, const Substitution& s) {
  substitute_everywhere(st, s);
  while (merge_redundant_functions(st)) {
  }
}

// ---------------------------------------------------------------------------
// Step: null derivatives

std::optional<Substitution> solve_null_derivative(SolutionState& st, const Expr& eq) {
  if (eq.size() != 1) return std::nullopt;
  Atom target;
  for (const auto& f : eq.terms()[0].mono) {
    if (st.is_unknown_atom(f.atom)) {
      if (target || f.exp != 1) return std::nullopt;
      target = f.atom;
    } else if (is_compound(f.atom) && st.involves_unknown(f.atom->inner)) {
      return std::nullopt;
    }
  }
  if (!target) return std::nullopt;
  const auto args = st.live.at(target->name);
  Expr value;
  for (const auto& v : args) {
    auto k = std::count(target->index.begin(), target->index.end(), v);
    if (k == 0) continue;
    auto rest = without(args, v);
    for (long j = 0; j < k; ++j) value += pow(st.var(v), Rational(j)) * fresh_function(st, rest);
  }
  return Substitution{target->name, value};
}

// ---------------------------------------------------------------------------
// Step: algebraic equations

std::optional<Substitution> solve_algebraic(SolutionState& st, const Expr& eq, bool original_only, bool strict) {
  auto unknowns = linear_unknowns(st, eq);
  if (!unknowns || unknowns->empty()) return std::nullopt;
  if (strict) {
    for (const auto& a : *unknowns) {
      if (!a->index.empty()) return std::nullopt;
    }
  }
  struct Candidate {
    Atom atom;
    std::size_t occ;
  };
  std::vector<Candidate> cands;
  for (const auto& a : *unknowns) {
    if (!a->index.empty()) continue;
    if (original_only && !contains(st.original, a->name)) continue;
    bool derived_elsewhere = std::any_of(unknowns->begin(), unknowns->end(), [&](const Atom& b) {
      return b->name == a->name && !b->index.empty();
    });
    if (derived_elsewhere) continue;
    const auto& args = st.live.at(a->name);
    Expr c = coefficient(eq, a, 1);
    Expr rest = eq - c * Expr::from_atom(a);
    auto vars = variables_of(st, c);
    auto rv = variables_of(st, rest);
    vars.insert(rv.begin(), rv.end());
    bool ok = std::all_of(vars.begin(), vars.end(), [&](const std::string& v) { return contains(args, v); });
    if (!ok) continue;
    cands.push_back({a, occurrences(st, a->name)});
  }
  if (cands.empty()) return std::nullopt;
  auto best = std::min_element(cands.begin(), cands.end(), [&](const Candidate& x, const Candidate& y) {
    if (x.occ != y.occ) return x.occ < y.occ;
    bool cx = coefficient(eq, x.atom, 1).is_constant(), cy = coefficient(eq, y.atom, 1).is_constant();
    if (cx != cy) return cx;
    return x.atom->name > y.atom->name;
  });
  Expr c = coefficient(eq, best->atom, 1);
  Expr rest = eq - c * Expr::from_atom(best->atom);
  return Substitution{best->atom->name, -rest / c};
}

// ---------------------------------------------------------------------------
// Integration

namespace {

bool mentions(const Expr& e, const std::string& v) { return depends_on_variable(e, v); }

Expr exp_of(const Expr& p) {
  // exp(q*ln(w)) = w^q; the rest stays exponential.
  Expr power(1), rest;
  for (const auto& t : p.terms()) {
    if (t.mono.size() == 1 && t.mono[0].exp == 1 && t.mono[0].atom->kind == AtomKind::Elem &&
        t.mono[0].atom->tag == ElemTag::Ln) {
      power *= pow(t.mono[0].atom->inner, t.coeff);
    } else {
      rest += Expr::from_terms({t});
    }
  }
  return power * exp(rest);
}

}  // namespace

std::optional<Expr> integrate(const Expr& e, const Expr& var) {
  Atom va = var.as_atom();
  if (!va) return std::nullopt;
  const std::string& v = va->name;
  Expr result;
  for (const auto& t : e.terms()) {
    Rational n = 0;
    Expr exponent;
    Monomial free_part, exp_part;
    for (const auto& f : t.mono) {
      if (atom_equal(f.atom, va)) {
        n = f.exp;
      } else if (f.atom->kind == AtomKind::Elem && f.atom->tag == ElemTag::Exp && mentions(f.atom->inner, v)) {
        if (!is_integer(f.exp)) return std::nullopt;
        exponent += Expr(f.exp) * f.atom->inner;
        exp_part.push_back(f);
      } else if (contains_atom(Expr::from_terms({Term{Rational(1), {f}}}),
                               [&](const Atom& a) { return atom_equal(a, va) || (a->kind == AtomKind::Fn && contains(a->args, v)); })) {
        return std::nullopt;
      } else {
        free_part.push_back(f);
      }
    }
    Expr coef = Expr::from_terms({Term{t.coeff, free_part}});
    if (exp_part.empty()) {
      if (n == -1) {
        result += coef * ln(var);
      } else {
        result += coef * pow(var, n + 1) / Expr(n + 1);
      }
      continue;
    }
    // exponent = alpha*v + beta with alpha free of v
    Expr alpha = coefficient(exponent, va, 1);
    Expr beta = coefficient(exponent, va, 0);
    if (alpha.is_zero() || mentions(alpha, v) || mentions(beta, v) || exponent != alpha * var + beta) {
      return std::nullopt;
    }
    if (n < 0 || !is_integer(n)) return std::nullopt;
    long k = n.get_num().get_si();
    Expr expo = Expr::from_terms({Term{Rational(1), exp_part}});
    Expr acc;
    Rational fall = 1;
    for (long j = 0; j <= k; ++j) {
      Rational sign = (j % 2 == 0) ? 1 : -1;
      acc += Expr(sign * fall) * pow(var, Rational(k - j)) * pow(alpha, Rational(-(j + 1)));
      fall *= (k - j);
    }
    result += coef * acc * expo;
  }
  return result;
}

// ---------------------------------------------------------------------------
// Step: single ODE

namespace {

// Rational roots with multiplicity of a polynomial given by ascending coefficients.
std::vector<std::pair<Rational, int>> rational_roots(std::vector<Rational> c) {
  std::vector<std::pair<Rational, int>> roots;
  auto eval = [](const std::vector<Rational>& p, const Rational& r) {
    Rational acc = 0;
    for (auto it = p.rbegin(); it != p.rend(); ++it) acc = acc * r + *it;
    return acc;
  };
  auto deflate = [](const std::vector<Rational>& p, const Rational& r) {
    std::vector<Rational> q(p.size() - 1);
    Rational carry = 0;
    for (std::size_t i = p.size() - 1; i-- > 0;) {
      carry = carry * r + p[i + 1];
      q[i] = carry;
    }
    return q;
  };
  auto add = [&](const Rational& r) {
    for (auto& [x, m] : roots) {
      if (x == r) {
        ++m;
        return;
      }
    }
    roots.push_back({r, 1});
  };
  while (c.size() > 1 && c[0] == 0) {
    c.erase(c.begin());
    add(0);
  }
  while (c.size() > 1) {
    // Clear denominators so the rational root theorem applies.
    mpz_class l = 1;
    for (const auto& q : c) mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), q.get_den_mpz_t());
    mpz_class a0 = abs(mpz_class(c.front() * l));
    mpz_class an = abs(mpz_class(c.back() * l));
    if (a0 > 1000000 || an > 1000000) return roots;
    bool found = false;
    for (mpz_class p = 1; p <= a0 && !found; ++p) {
      if (a0 % p != 0) continue;
      for (mpz_class q = 1; q <= an && !found; ++q) {
        if (an % q != 0) continue;
        for (int sgn : {1, -1}) {
          Rational r(sgn * p, q);
          r.canonicalize();
          if (eval(c, r) == 0) {
            add(r);
            c = deflate(c, r);
            found = true;
            break;
          }
        }
      }
    }
    if (!found) return roots;
  }
  return roots;
}

// Homogeneous linear ODE in one variable with rational coefficients.
std::optional<Expr> constant_coefficient_ode(SolutionState& st, const Expr& eq, const std::vector<Atom>& own,
                                             const std::string& v, const Expr& x,
                                             const std::vector<std::string>& rest_args) {
  std::size_t k = 0;
  std::vector<Rational> coeffs;
  for (const auto& a : own) k = std::max(k, a->index.size());
  coeffs.assign(k + 1, Rational(0));
  Expr rest = eq;
  for (const auto& a : own) {
    Expr c = coefficient(eq, a, 1);
    auto q = c.as_rational();
    if (!q) return std::nullopt;
    coeffs[a->index.size()] = *q;
    rest -= c * Expr::from_atom(a);
  }
  if (!rest.is_zero() || k < 2) return std::nullopt;
  auto roots = rational_roots(coeffs);
  std::size_t total = 0;
  for (const auto& [r, m] : roots) total += static_cast<std::size_t>(m);
  if (total != k) return std::nullopt;
  (void)v;
  Expr value;
  for (const auto& [r, m] : roots) {
    for (int j = 0; j < m; ++j) value += pow(x, Rational(j)) * exp(Expr(r) * x) * fresh_function(st, rest_args);
  }
  return value;
}

}  // namespace

std::optional<Substitution> integrate_single_ode(SolutionState& st, const Expr& eq) {
  auto unknowns = linear_unknowns(st, eq);
  if (!unknowns || unknowns->empty()) return std::nullopt;
  std::set<std::string> names;
  for (const auto& a : *unknowns) names.insert(a->name);
  for (const auto& f : names) {
    std::vector<Atom> own;
    for (const auto& a : *unknowns) {
      if (a->name == f) own.push_back(a);
    }
    std::string v;
    bool single_var = true;
    std::size_t k = 0;
    for (const auto& a : own) {
      for (const auto& x : a->index) {
        if (v.empty()) v = x;
        if (x != v) single_var = false;
      }
      k = std::max(k, a->index.size());
    }
    if (!single_var || v.empty()) continue;
    const auto& args = st.live.at(f);
    bool others_free = std::all_of(unknowns->begin(), unknowns->end(), [&](const Atom& a) {
      return a->name == f || !contains(st.live.at(a->name), v);
    });
    if (!others_free) continue;
    Expr x = st.var(v);
    auto rest_args = without(args, v);
    auto within_args = [&](const Expr& e) {
      auto vs = variables_of(st, e);
      return std::all_of(vs.begin(), vs.end(), [&](const std::string& s) { return contains(args, s); });
    };
    if (own.size() == 1) {
      const Atom& top = own[0];
      Expr c = coefficient(eq, top, 1);
      Expr h = -(eq - c * Expr::from_atom(top)) / c;
      if (!within_args(h)) continue;
      std::optional<Expr> value = h;
      for (std::size_t i = 0; i < k && value; ++i) value = integrate(*value, x);
      if (!value) continue;
      for (std::size_t j = 0; j < k; ++j) *value += pow(x, Rational(static_cast<long>(j))) * fresh_function(st, rest_args);
      return Substitution{f, *value};
    }
    if (auto cc = constant_coefficient_ode(st, eq, own, v, x, rest_args)) return Substitution{f, *cc};
    if (own.size() == 2 && k == 1) {
      Atom d = own[0]->index.empty() ? own[1] : own[0];
      Atom base = own[0]->index.empty() ? own[0] : own[1];
      Expr a = coefficient(eq, d, 1), b = coefficient(eq, base, 1);
      Expr r = eq - a * Expr::from_atom(d) - b * Expr::from_atom(base);
      Expr p = -b / a, q = -r / a;
      if (!within_args(p) || !within_args(q)) continue;
      auto P = integrate(p, x);
      if (!P) continue;
      Expr mu = exp_of(*P);
      auto Q = integrate(q * pow(mu, Rational(-1)), x);
      if (!Q) continue;
      return Substitution{f, mu * (fresh_function(st, rest_args) + *Q)};
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Step: splitting on linearly independent functions

std::optional<std::vector<Expr>> li_split(const SolutionState& st, const Expr& eq) {
  Expr e = clear_denominators(eq);
  std::set<std::string> bound;
  for_each_atom(e, [&](const Atom& a) {
    if (a->kind == AtomKind::Fn) bound.insert(a->args.begin(), a->args.end());
  });
  std::set<std::string> split;
  for_each_atom(e, [&](const Atom& a) {
    if ((a->kind == AtomKind::Indep || a->kind == AtomKind::Dep) && contains(st.vars, a->name) &&
        !bound.count(a->name)) {
      split.insert(a->name);
    }
  });
  if (split.empty()) return std::nullopt;
  auto is_split_var = [&](const Atom& a) {
    return (a->kind == AtomKind::Indep || a->kind == AtomKind::Dep) && split.count(a->name) != 0;
  };
  auto has_split = [&](const Expr& x) { return contains_atom(x, is_split_var); };

  struct Key {
    Monomial poly;
    Expr exponent;
  };
  struct KeyLess {
    bool operator()(const Key& a, const Key& b) const {
      int c = compare(a.poly, b.poly);
      if (c != 0) return c < 0;
      return compare(a.exponent, b.exponent) < 0;
    }
  };
  std::map<Key, Expr, KeyLess> groups;
  for (const auto& t : e.terms()) {
    Key key;
    Monomial rest;
    Expr exponent;
    for (const auto& f : t.mono) {
      if (is_split_var(f.atom)) {
        if (!(f.exp > 0 && is_integer(f.exp))) return std::nullopt;
        key.poly.push_back(f);
      } else if (f.atom->kind == AtomKind::Elem && f.atom->tag == ElemTag::Exp && has_split(f.atom->inner)) {
        if (!is_integer(f.exp)) return std::nullopt;
        exponent += Expr(f.exp) * f.atom->inner;
      } else if (f.atom->kind == AtomKind::Elem && f.atom->tag == ElemTag::Ln && has_split(f.atom->inner)) {
        Atom inner = f.atom->inner.as_atom();
        if (!inner || !is_split_var(inner) || !(f.exp > 0 && is_integer(f.exp))) return std::nullopt;
        key.poly.push_back(f);
      } else if (is_compound(f.atom) && has_split(f.atom->inner)) {
        return std::nullopt;
      } else {
        rest.push_back(f);
      }
    }
    std::sort(key.poly.begin(), key.poly.end(), [](const Factor& a, const Factor& b) { return compare(a.atom, b.atom) < 0; });
    Expr split_part, fixed_part;
    for (const auto& et : exponent.terms()) {
      Expr term = Expr::from_terms({et});
      if (has_split(term)) {
        split_part += term;
      } else {
        fixed_part += term;
      }
    }
    key.exponent = split_part;
    Expr coef = Expr::from_terms({Term{t.coeff, rest}}) * exp(fixed_part);
    groups[key] += coef;
  }
  std::vector<Expr> out;
  std::set<Expr, ExprLess> seen;
  for (const auto& [k, c] : groups) {
    Expr p = make_primitive(c);
    if (!p.is_zero() && seen.insert(p).second) out.push_back(p);
  }
  if (out.size() == 1 && out[0] == make_primitive(eq)) return std::nullopt;
  return out;
}

// ---------------------------------------------------------------------------
// Step: f1(x1,x2) = f2(x1,x3)

std::optional<std::vector<Substitution>> separate_mixed_args(SolutionState& st, const Expr& eq) {
  if (eq.size() != 2) return std::nullopt;
  Atom a[2];
  Rational c[2];
  for (int i = 0; i < 2; ++i) {
    const Term& t = eq.terms()[static_cast<std::size_t>(i)];
    if (t.mono.size() != 1 || t.mono[0].exp != 1 || !st.is_unknown_atom(t.mono[0].atom) ||
        !t.mono[0].atom->index.empty()) {
      return std::nullopt;
    }
    a[i] = t.mono[0].atom;
    c[i] = t.coeff;
  }
  const auto& args1 = st.live.at(a[0]->name);
  const auto& args2 = st.live.at(a[1]->name);
  if (a[0]->name == a[1]->name || is_subset(args1, args2) || is_subset(args2, args1)) return std::nullopt;
  std::vector<std::string> common;
  for (const auto& x : args1) {
    if (contains(args2, x)) common.push_back(x);
  }
  Expr f3 = fresh_function(st, common);
  return std::vector<Substitution>{{a[1]->name, f3}, {a[0]->name, Expr(-c[1] / c[0]) * f3}};
}

// ---------------------------------------------------------------------------
// Step: c1*L(f1) + ... + cn*L(fn) = 0 with one operator L

std::optional<Substitution> combine_unknowns(SolutionState& st, const Expr& eq) {
  auto unknowns = linear_unknowns(st, eq);
  if (!unknowns) return std::nullopt;
  std::map<std::string, std::map<std::vector<std::string>, Expr>> ops;
  Expr remainder = eq;
  for (const auto& a : *unknowns) {
    Expr c = coefficient(eq, a, 1);
    ops[a->name][a->index] = c;
    remainder -= c * Expr::from_atom(a);
  }
  if (ops.size() < 2 || !remainder.is_zero()) return std::nullopt;
  const auto& args = st.live.at(ops.begin()->first);
  // Each operator scaled so its first coefficient is 1; scales must be rational.
  std::vector<std::pair<std::string, Rational>> scale;
  std::map<std::vector<std::string>, Expr> reference;
  for (const auto& [name, op] : ops) {
    if (st.live.at(name) != args) return std::nullopt;
    auto lead = op.begin()->second.as_rational();
    if (!lead) return std::nullopt;
    std::map<std::vector<std::string>, Expr> scaled;
    for (const auto& [idx, c] : op) scaled[idx] = c / Expr(*lead);
    if (reference.empty()) {
      reference = scaled;
    } else if (scaled.size() != reference.size() ||
               !std::equal(scaled.begin(), scaled.end(), reference.begin(), [](const auto& x, const auto& y) {
                 return x.first == y.first && x.second == y.second;
               })) {
      return std::nullopt;
    }
    scale.push_back({name, *lead});
  }
  // The operator must not depend on the variables it differentiates in.
  for (const auto& [idx, c] : reference) {
    auto vs = variables_of(st, c);
    if (std::any_of(vs.begin(), vs.end(), [&](const std::string& v) { return contains(args, v); })) return std::nullopt;
  }
  Expr value = fresh_function(st, args);
  for (std::size_t k = 1; k < scale.size(); ++k) {
    value -= Expr(scale[k].second / scale[0].second) * fn(scale[k].first, args);
  }
  return Substitution{scale[0].first, value};
}

// ---------------------------------------------------------------------------
// Completion

namespace {

class Completion {
 public:
  Completion(const SolutionState& st, int budget) : st_(st), budget_(budget) {}

  bool exhausted() const { return steps_ > budget_; }

  int rank_compare(const Atom& a, const Atom& b) const {
    if (a->index.size() != b->index.size()) return a->index.size() < b->index.size() ? -1 : 1;
    std::size_t na = st_.live.at(a->name).size(), nb = st_.live.at(b->name).size();
    if (na != nb) return na < nb ? -1 : 1;
    if (a->name != b->name) return a->name < b->name ? -1 : 1;
    for (const auto& v : st_.vars) {
      auto ca = std::count(a->index.begin(), a->index.end(), v);
      auto cb = std::count(b->index.begin(), b->index.end(), v);
      if (ca != cb) return ca < cb ? -1 : 1;
    }
    return 0;
  }

  Atom leader(const Expr& e) const {
    Atom best;
    for_each_atom(e, [&](const Atom& a) {
      if (st_.is_unknown_atom(a) && (!best || rank_compare(a, best) > 0)) best = a;
    });
    return best;
  }

  static bool divides(const Atom& l, const Atom& a) {
    return l->name == a->name && std::includes(a->index.begin(), a->index.end(), l->index.begin(), l->index.end());
  }

  Expr differentiate(const Expr& e, const std::vector<std::string>& index) const {
    Expr out = e;
    for (const auto& v : index) out = pdiff_var(out, v);
    return out;
  }

  static std::vector<std::string> minus(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::vector<std::string> out;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
  }

  Expr reduce(Expr e, const std::vector<Expr>& basis) {
    for (;;) {
      if (e.is_zero() || exhausted()) return e;
      // Highest-ranked atom of e that is a derivative of a basis leader.
      Atom target;
      const Expr* rule = nullptr;
      Atom rule_leader;
      for_each_atom(e, [&](const Atom& a) {
        if (!st_.is_unknown_atom(a)) return;
        if (target && rank_compare(a, target) <= 0) return;
        for (const auto& r : basis) {
          Atom l = leader(r);
          if (l && divides(l, a)) {
            target = a;
            rule = &r;
            rule_leader = l;
            break;
          }
        }
      });
      if (!target) return e;
      ++steps_;
      Expr d = differentiate(*rule, minus(target->index, rule_leader->index));
      Expr cr = coefficient(*rule, rule_leader, 1);
      Expr ce = coefficient(e, target, 1);
      if (auto q = cr.as_rational()) {
        e = e - (ce / Expr(*q)) * d;
      } else {
        e = cr * e - ce * d;
      }
      e = make_primitive(e);
    }
  }

  std::vector<Expr> autoreduce(std::vector<Expr> pending) {
    std::vector<Expr> basis;
    while (!pending.empty() && !exhausted()) {
      std::stable_sort(pending.begin(), pending.end(), [&](const Expr& a, const Expr& b) {
        return rank_compare(leader(a), leader(b)) > 0;
      });
      Expr e = pending.back();
      pending.pop_back();
      e = reduce(e, basis);
      if (e.is_zero()) continue;
      Atom l = leader(e);
      if (!l) continue;
      for (auto it = basis.begin(); it != basis.end();) {
        bool hit = contains_atom(*it, [&](const Atom& a) { return st_.is_unknown_atom(a) && divides(l, a); });
        if (hit) {
          pending.push_back(*it);
          it = basis.erase(it);
        } else {
          ++it;
        }
      }
      basis.push_back(e);
    }
    return basis;
  }

  std::vector<Expr> complete(const std::vector<Expr>& input) {
    std::vector<Expr> basis = autoreduce(input);
    std::set<std::pair<Expr, Expr>, PairLess> done;
    for (;;) {
      if (exhausted()) return basis;
      bool added = false;
      for (std::size_t i = 0; i < basis.size() && !added; ++i) {
        for (std::size_t j = i + 1; j < basis.size() && !added; ++j) {
          Atom li = leader(basis[i]), lj = leader(basis[j]);
          if (li->name != lj->name) continue;
          auto key = std::make_pair(basis[i], basis[j]);
          if (!done.insert(key).second) continue;
          std::vector<std::string> lcm;
          std::set_union(li->index.begin(), li->index.end(), lj->index.begin(), lj->index.end(),
                         std::back_inserter(lcm));
          // Multiset union keeps the maximum multiplicity.
          Expr di = differentiate(basis[i], minus(lcm, li->index));
          Expr dj = differentiate(basis[j], minus(lcm, lj->index));
          Expr ci = coefficient(basis[i], li, 1), cj = coefficient(basis[j], lj, 1);
          Expr s = make_primitive(cj * di - ci * dj);
          ++steps_;
          s = reduce(s, basis);
          if (!s.is_zero()) {
            std::vector<Expr> next = basis;
            next.push_back(s);
            basis = autoreduce(next);
            added = true;
          }
        }
      }
      if (!added) return basis;
    }
  }

 private:
  struct PairLess {
    bool operator()(const std::pair<Expr, Expr>& a, const std::pair<Expr, Expr>& b) const {
      int c = compare(a.first, b.first);
      if (c != 0) return c < 0;
      return compare(a.second, b.second) < 0;
    }
  };

  const SolutionState& st_;
  int budget_;
  int steps_ = 0;
};

std::vector<Expr> sorted_set(std::vector<Expr> v) {
  std::sort(v.begin(), v.end(), ExprLess());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

CompletionResult involutive_reduce(const SolutionState& st, const std::vector<Expr>& eqs, int budget) {
  CompletionResult res;
  for (const auto& e : eqs) {
    if (!linear_unknowns(st, e)) {
      res.eqs = eqs;
      return res;
    }
  }
  Completion c(st, budget);
  auto out = c.complete(eqs);
  if (c.exhausted()) {
    res.eqs = eqs;
    res.budget_exceeded = true;
    return res;
  }
  std::vector<Expr> prim, before;
  for (const auto& e : out) prim.push_back(make_primitive(e));
  for (const auto& e : eqs) before.push_back(make_primitive(e));
  res.changed = sorted_set(prim) != sorted_set(before);
  res.eqs = prim;
  return res;
}

// ---------------------------------------------------------------------------
// Driver

namespace {

class Driver {
 public:
  Driver(SolutionState& st, const SolverParams& p) : st_(st), p_(p) {}

  void run() {
    int step = 1;
    bool progress_in_pass = false;
    int executed = 0;
    while (!st_.eqs.empty()) {
      if (++executed > kMaxSteps) break;
      int next = step + 1;
      bool ok = false;
      switch (step) {
        case 1: case 10: case 12: ok = algebraic(2, false, true); break;
        case 2: case 13: ok = null_derivatives(); break;
        case 3: ok = algebraic(SIZE_MAX, true, true); break;
        case 4: ok = completion(static_cast<std::size_t>(p_.n1)); break;
        case 5: case 11: ok = splitting(); break;
        case 6: ok = null_derivatives(); if (ok) next = 10; break;
        case 7: ok = completion(SIZE_MAX); if (ok) next = 10; break;
        case 8: case 14: case 18: ok = odes_escalating(); if (ok) next = 10; break;
        case 9: ok = one_ode(); if (ok) next = 1; break;
        case 15: ok = algebraic(SIZE_MAX, false, false); if (ok) next = 10; break;
        case 16: ok = completion(SIZE_MAX); if (ok) next = 10; break;
        case 17: ok = mixed_args() || combined(); if (ok) next = 10; break;
        default: break;
      }
      progress_in_pass = progress_in_pass || ok;
      if (ok && next == 10) {
        // Guard against cycling between completion and other steps.
        auto snapshot = sorted_set(st_.eqs);
        if (!seen_.insert(snapshot).second && (step == 7 || step == 16)) next = step + 1;
      }
      if (next > 18) {
        if (!progress_in_pass) break;
        progress_in_pass = false;
        next = 1;
      }
      step = next;
    }
    finish();
  }

 private:
  static constexpr int kMaxSteps = 20000;

  bool algebraic(std::size_t max_terms, bool original_only, bool strict) {
    bool any = false;
    for (bool again = true; again;) {
      again = false;
      for (auto i : by_simplicity(st_, max_terms)) {
        if (auto s = solve_algebraic(st_, st_.eqs[i], original_only, strict)) {
          apply_substitution(st_, *s);
          any = again = true;
          break;
        }
      }
    }
    return any;
  }

  bool null_derivatives() {
    bool any = false;
    for (bool again = true; again;) {
      again = false;
      for (auto i : by_simplicity(st_, 1)) {
        if (auto s = solve_null_derivative(st_, st_.eqs[i])) {
          apply_substitution(st_, *s);
          any = again = true;
          break;
        }
      }
    }
    return any;
  }

  bool splitting() {
    bool any = false;
    for (bool again = true; again;) {
      again = false;
      for (std::size_t i = 0; i < st_.eqs.size(); ++i) {
        if (auto parts = li_split(st_, st_.eqs[i])) {
          st_.trace.push_back("split " + to_string(st_.eqs[i]) + " into " + std::to_string(parts->size()));
          st_.eqs.erase(st_.eqs.begin() + static_cast<std::ptrdiff_t>(i));
          st_.eqs.insert(st_.eqs.end(), parts->begin(), parts->end());
          normalize_equations(st_);
          any = again = true;
          break;
        }
      }
    }
    return any;
  }

  bool completion(std::size_t max_terms) {
    std::vector<Expr> subset, rest;
    for (const auto& e : st_.eqs) (e.size() <= max_terms ? subset : rest).push_back(e);
    if (subset.size() < 2) return false;
    auto res = involutive_reduce(st_, subset, p_.budget);
    if (res.budget_exceeded) st_.budget_exceeded = true;
    if (!res.changed) return false;
    st_.trace.push_back("completion on " + std::to_string(subset.size()) + " equations");
    st_.eqs = rest;
    st_.eqs.insert(st_.eqs.end(), res.eqs.begin(), res.eqs.end());
    normalize_equations(st_);
    return true;
  }

  bool odes(std::size_t max_terms, bool only_one) {
    bool any = false;
    for (bool again = true; again;) {
      again = false;
      for (auto i : by_simplicity(st_, max_terms)) {
        SolutionState probe = st_;
        if (auto s = integrate_single_ode(probe, st_.eqs[i])) {
          st_.live = probe.live;
          st_.next_function = probe.next_function;
          st_.next_constant = probe.next_constant;
          apply_substitution(st_, *s);
          any = true;
          again = !only_one;
          break;
        }
      }
    }
    return any;
  }

  bool odes_escalating() {
    for (int n = p_.n2; n <= std::max(p_.n2, p_.n3); n += 3) {
      if (odes(static_cast<std::size_t>(n), false)) return true;
    }
    return false;
  }

  bool one_ode() { return odes(SIZE_MAX, true); }

  bool mixed_args() {
    for (auto i : by_simplicity(st_, 2)) {
      SolutionState probe = st_;
      if (auto subs = separate_mixed_args(probe, st_.eqs[i])) {
        st_.live = probe.live;
        st_.next_function = probe.next_function;
        st_.next_constant = probe.next_constant;
        for (const auto& s : *subs) apply_substitution(st_, s);
        return true;
      }
    }
    return false;
  }

  bool combined() {
    for (auto i : by_simplicity(st_, SIZE_MAX)) {
      SolutionState probe = st_;
      if (auto s = combine_unknowns(probe, st_.eqs[i])) {
        st_.live = probe.live;
        st_.next_function = probe.next_function;
        st_.next_constant = probe.next_constant;
        apply_substitution(st_, *s);
        return true;
      }
    }
    return false;
  }

  // Unsolved original unknowns become arbitrary functions; equations left in
  // a single function are its constraints, the rest stay unsolved.
  void finish() {
    for (const auto& name : st_.original) {
      if (!st_.live.count(name)) continue;
      auto args = st_.live.at(name);
      Expr f = fresh_function(st_, args);
      apply_substitution(st_, Substitution{name, f});
    }
    for (const auto& e : st_.eqs) {
      std::set<std::string> names;
      for_each_atom(e, [&](const Atom& a) {
        if (st_.is_unknown_atom(a)) names.insert(a->name);
      });
      (names.size() == 1 ? st_.constraints : st_.remaining).push_back(e);
    }
    st_.eqs.clear();
  }

  SolutionState& st_;
  const SolverParams& p_;
  std::set<std::vector<Expr>, std::function<bool(const std::vector<Expr>&, const std::vector<Expr>&)>> seen_{
      [](const std::vector<Expr>& a, const std::vector<Expr>& b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), ExprLess());
      }};
};

}  // namespace

SolutionState solve_linear(const LinearSystem& sys, const SolverParams& p) {
  SolutionState st = make_state(sys);
  Driver(st, p).run();
  return st;
}

// ---------------------------------------------------------------------------
// Assembly

namespace {

// Live unknowns occurring in e.
std::vector<std::string> free_unknowns(const SolutionState& st, const Expr& e) {
  std::set<std::string> names;
  for_each_atom(e, [&](const Atom& a) {
    if (st.is_unknown_atom(a)) names.insert(a->name);
  });
  return {names.begin(), names.end()};
}

// Orders fresh names numerically (_F2 before _F10).
bool name_less(const std::string& a, const std::string& b) {
  auto num = [](const std::string& s) {
    auto p = s.find_first_of("0123456789");
    return p == std::string::npos ? -1L : std::stol(s.substr(p));
  };
  if (a.substr(0, 2) != b.substr(0, 2)) return a < b;
  long na = num(a), nb = num(b);
  if (na != nb) return na < nb;
  return a < b;
}

}  // namespace

LinearAssembly assemble_linear(const SolutionState& st, const std::vector<std::string>& targets) {
  LinearAssembly out;
  std::map<std::string, Expr> values;
  for (const auto& t : targets) {
    auto it = st.found.find(t);
    values[t] = it != st.found.end() ? it->second : fn(t, st.live.count(t) ? st.live.at(t) : std::vector<std::string>{});
  }
  std::set<std::string, decltype(&name_less)> symbols(&name_less);
  for (const auto& [t, v] : values) {
    for (const auto& n : free_unknowns(st, v)) symbols.insert(n);
  }
  // Union-find over symbols tied together by unsolved equations.
  std::map<std::string, std::string> parent;
  std::function<std::string(const std::string&)> root = [&](const std::string& x) -> std::string {
    auto it = parent.find(x);
    if (it == parent.end() || it->second == x) return x;
    return it->second = root(it->second);
  };
  std::vector<Expr> unsolved = st.constraints;
  unsolved.insert(unsolved.end(), st.remaining.begin(), st.remaining.end());
  std::set<std::string> constrained;
  for (const auto& e : unsolved) {
    auto names = free_unknowns(st, e);
    for (const auto& n : names) {
      constrained.insert(n);
      parent.emplace(n, n);
    }
    for (std::size_t i = 1; i < names.size(); ++i) parent[root(names[i])] = root(names[0]);
  }
  auto part_of = [&](const Expr& v, const std::function<bool(const std::string&)>& keep) {
    Expr acc;
    for (const auto& t : v.terms()) {
      Expr term = Expr::from_terms({t});
      auto names = free_unknowns(st, term);
      if (!names.empty() && keep(names[0])) acc += term;
    }
    return acc;
  };
  for (const auto& s : symbols) {
    if (!st.live.at(s).empty() || constrained.count(s)) continue;
    std::map<std::string, Expr> g;
    for (const auto& [t, v] : values) g[t] = coefficient(v, fn_atom(s, {}), 1);
    out.basis.push_back(g);
  }
  std::vector<std::string> roots;
  for (const auto& s : symbols) {
    if (st.live.at(s).empty() && !constrained.count(s)) continue;
    std::string r = root(s);
    if (!contains(roots, r)) roots.push_back(r);
  }
  for (const auto& r : roots) {
    std::map<std::string, Expr> g;
    for (const auto& [t, v] : values) {
      g[t] = part_of(v, [&](const std::string& n) { return root(n) == r; });
    }
    std::vector<std::string> fns;
    for (const auto& s : symbols) {
      if ((st.live.at(s).size() > 0 || constrained.count(s)) && root(s) == r) {
        fns.push_back(s);
        out.function_args[s] = st.live.at(s);
      }
    }
    std::vector<Expr> cons;
    for (const auto& e : unsolved) {
      auto names = free_unknowns(st, e);
      if (!names.empty() && root(names[0]) == r) cons.push_back(e);
    }
    out.families.push_back({g, fns});
    out.family_constraints.push_back(cons);
  }
  return out;
}

namespace {

Generator to_generator(const std::map<std::string, Expr>& values, const DeterminingSystem& ds) {
  Generator g = zero_generator(ds.space);
  for (std::size_t i = 0; i < ds.space.indep.size(); ++i) g.theta[i] = values.at("theta_" + ds.space.indep[i]);
  for (std::size_t j = 0; j < ds.space.dep.size(); ++j) g.eta[j] = values.at("eta_" + ds.space.dep[j]);
  return g;
}

// Scales so the first nonzero component (independent variables first) has leading coefficient 1.
Generator normalize_generator(Generator g) {
  const Expr* first = nullptr;
  for (const auto& c : g.theta) {
    if (!c.is_zero()) {
      first = &c;
      break;
    }
  }
  if (!first) {
    for (const auto& c : g.eta) {
      if (!c.is_zero()) {
        first = &c;
        break;
      }
    }
  }
  if (!first) return g;
  Rational lead = first->terms()[0].coeff;
  Expr s(Rational(1) / lead);
  for (auto& c : g.theta) c = c * s;
  for (auto& c : g.eta) c = c * s;
  return g;
}

}  // namespace

SymmetryResult assemble_generators(const SolutionState& st, const DeterminingSystem& ds) {
  SymmetryResult res;
  res.space = ds.space;
  res.complete = st.complete();
  res.budget_exceeded = st.budget_exceeded;
  res.remaining = st.remaining;
  res.decl.indep = ds.space.indep;
  res.decl.dep = ds.space.dep;
  res.decl.params = ds.params;
  auto lin = assemble_linear(st, ds.unknowns);
  std::vector<Generator> basis;
  for (const auto& b : lin.basis) {
    Generator g = to_generator(b, ds);
    if (!g.is_zero()) basis.push_back(normalize_generator(g));
  }
  res.basis = independent_subset(basis);
  // Rename family functions to _F1, _F2, ... in order of appearance.
  int counter = 1;
  for (std::size_t i = 0; i < lin.families.size(); ++i) {
    const auto& [values, fns] = lin.families[i];
    GeneratorFamily fam;
    fam.gen = to_generator(values, ds);
    fam.constraints = lin.family_constraints[i];
    std::vector<std::pair<std::string, std::string>> renames;
    for (const auto& f : fns) {
      std::string tmp = "__tmp" + f;
      auto args = lin.function_args.at(f);
      auto rn = [&](Expr& e) { e = substitute_function(e, f, fn(tmp, args)); };
      for (auto& c : fam.gen.theta) rn(c);
      for (auto& c : fam.gen.eta) rn(c);
      for (auto& c : fam.constraints) rn(c);
      renames.push_back({tmp, (args.empty() ? "_C" : "_F") + std::to_string(counter++)});
    }
    for (std::size_t k = 0; k < renames.size(); ++k) {
      const auto& [tmp, final_name] = renames[k];
      auto args = lin.function_args.at(fns[k]);
      auto rn = [&](Expr& e) { e = substitute_function(e, tmp, fn(final_name, args)); };
      for (auto& c : fam.gen.theta) rn(c);
      for (auto& c : fam.gen.eta) rn(c);
      for (auto& c : fam.constraints) rn(c);
      fam.functions.push_back(final_name);
      res.decl.funs.push_back(final_name);
      res.decl.fun_args[final_name] = args;
    }
    if (!fam.gen.is_zero()) res.families.push_back(fam);
  }
  // Remaining equations keep solver names; declare them so output parses back.
  for (const auto& e : st.remaining) {
    for (const auto& n : free_unknowns(st, e)) {
      if (!res.decl.is_fun(n)) {
        res.decl.funs.push_back(n);
        res.decl.fun_args[n] = st.live.at(n);
      }
    }
  }
  return res;
}

SymmetryResult lie_symmetries(const DESystem& sys, const SolverParams& p) {
  DeterminingSystem ds = determining_system(sys);
  SolutionState st = solve_linear(to_linear_system(ds), p);
  return assemble_generators(st, ds);
}

}  // namespace symkit
