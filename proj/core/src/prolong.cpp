#include "symkit/prolong.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace symkit {

bool Generator::is_zero() const {
  for (const auto& e : theta) {
    if (!is_zero_rational(e)) return false;
  }
  for (const auto& e : eta) {
    if (!is_zero_rational(e)) return false;
  }
  return true;
}

Generator zero_generator(const JetSpace& space) {
  Generator g;
  g.theta.assign(space.indep.size(), Expr());
  g.eta.assign(space.dep.size(), Expr());
  return g;
}

std::vector<std::string> generator_vars(const JetSpace& space) {
  std::vector<std::string> vars = space.dep;
  vars.insert(vars.end(), space.indep.begin(), space.indep.end());
  return vars;
}

Expr& component(Generator& g, const JetSpace& space, const std::string& var) {
  for (std::size_t i = 0; i < space.indep.size(); ++i) {
    if (space.indep[i] == var) return g.theta[i];
  }
  for (std::size_t j = 0; j < space.dep.size(); ++j) {
    if (space.dep[j] == var) return g.eta[j];
  }
  throw Error("unknown generator variable '" + var + "'");
}

const Expr& component(const Generator& g, const JetSpace& space, const std::string& var) {
  return component(const_cast<Generator&>(g), space, var);
}

std::string to_string(const Generator& g, const JetSpace& space) {
  std::ostringstream os;
  bool first = true;
  for (const auto& v : generator_vars(space)) {
    const Expr& c = component(g, space, v);
    if (c.is_zero()) continue;
    std::string body;
    bool negative = false;
    if (c.is_monomial()) {
      const Term& t = c.terms()[0];
      negative = t.coeff < 0;
      Expr mag = negative ? -c : c;
      body = mag == Expr(1) ? "" : to_string(mag) + "*";
    } else {
      body = "(" + to_string(c) + ")*";
    }
    if (first) {
      os << (negative ? "-" : "");
    } else {
      os << (negative ? " - " : " + ");
    }
    first = false;
    os << body << "D[" << v << "]";
  }
  if (first) os << "0";
  return os.str();
}

Generator generator_from_expr(const Expr& e, const JetSpace& space) {
  Generator g = zero_generator(space);
  Expr rest = e;
  for (const auto& v : generator_vars(space)) {
    Atom d = dop_atom(v);
    Expr c = coefficient(e, d, 1);
    component(g, space, v) = c;
    rest -= c * Expr::from_atom(d);
  }
  if (!rest.is_zero() || contains_atom(e, [](const Atom& a) {
        return (a->kind == AtomKind::Elem || a->kind == AtomKind::Pow) &&
               contains_atom(a->inner, [](const Atom& b) { return b->kind == AtomKind::DOp; });
      })) {
    throw Error("generator is not linear in D[...]: " + to_string(e));
  }
  for (const auto& v : generator_vars(space)) {
    if (contains_atom(component(g, space, v), [](const Atom& a) { return a->kind == AtomKind::DOp; })) {
      throw Error("generator is not linear in D[...]: " + to_string(e));
    }
  }
  return g;
}

Generator parse_generator(const std::string& text, const Declarations& decl) {
  JetSpace space{decl.indep, decl.dep};
  return generator_from_expr(parse_expr(text, decl), space);
}

std::vector<std::string> generic_unknowns(const JetSpace& space) {
  std::vector<std::string> names;
  for (const auto& x : space.indep) names.push_back("theta_" + x);
  for (const auto& u : space.dep) names.push_back("eta_" + u);
  return names;
}

Generator generic_generator(const JetSpace& space) {
  std::vector<std::string> args = space.indep;
  args.insert(args.end(), space.dep.begin(), space.dep.end());
  Generator g;
  for (const auto& x : space.indep) g.theta.push_back(fn("theta_" + x, args));
  for (const auto& u : space.dep) g.eta.push_back(fn("eta_" + u, args));
  return g;
}

std::vector<Expr> evolutionary(const Generator& g, const JetSpace& space) {
  std::vector<Expr> q;
  for (std::size_t j = 0; j < space.dep.size(); ++j) {
    Expr e = g.eta[j];
    for (std::size_t i = 0; i < space.indep.size(); ++i) e -= jet(space.dep[j], {space.indep[i]}) * g.theta[i];
    q.push_back(e);
  }
  return q;
}

ProlongedGenerator::ProlongedGenerator(Generator base, JetSpace space, std::size_t order)
    : base_(std::move(base)), space_(std::move(space)), order_(order) {
  for (std::size_t j = 0; j < space_.dep.size(); ++j) coeffs_.emplace(dep_atom(space_.dep[j]), base_.eta[j]);
}

Expr ProlongedGenerator::d_theta(std::size_t i, const std::string& x) {
  auto key = std::make_pair(i, x);
  auto it = dtheta_.find(key);
  if (it != dtheta_.end()) return it->second;
  Expr d = total_derivative(base_.theta[i], x, space_);
  dtheta_.emplace(key, d);
  return d;
}

Expr ProlongedGenerator::coefficient(const Atom& j) {
  auto it = coeffs_.find(j);
  if (it != coeffs_.end()) return it->second;
  if (jet_order(j) > order_) {
    throw InsufficientOrder("prolongation of order " + std::to_string(order_) + " cannot act on " + to_string(j));
  }
  // eta_{I+x} = D_x eta_I - sum_l u_{I+l} D_x theta_l
  auto lower = j->index;
  std::string x = lower.back();
  lower.pop_back();
  Atom lower_atom = jet_atom(j->name, lower);
  Expr value = total_derivative(coefficient(lower_atom), x, space_);
  for (std::size_t l = 0; l < space_.indep.size(); ++l) {
    Expr dt = d_theta(l, x);
    if (dt.is_zero()) continue;
    auto idx = lower;
    idx.push_back(space_.indep[l]);
    value -= jet(j->name, idx) * dt;
  }
  coeffs_.emplace(j, value);
  return value;
}

Expr ProlongedGenerator::apply(const Expr& e) {
  auto var_image = [&](const std::string& v) -> Expr {
    for (std::size_t i = 0; i < space_.indep.size(); ++i) {
      if (space_.indep[i] == v) return base_.theta[i];
    }
    for (std::size_t j = 0; j < space_.dep.size(); ++j) {
      if (space_.dep[j] == v) return base_.eta[j];
    }
    return Expr();
  };
  return derive(e, [&](const Atom& a) -> Expr {
    switch (a->kind) {
      case AtomKind::Indep:
        return var_image(a->name);
      case AtomKind::Dep:
      case AtomKind::Jet:
        return coefficient(a);
      case AtomKind::Fn: {
        Expr sum;
        for (const auto& arg : a->args) {
          Expr d = var_image(arg);
          if (d.is_zero()) continue;
          auto idx = a->index;
          idx.push_back(arg);
          sum += fn(a->name, a->args, idx) * d;
        }
        return sum;
      }
      default:
        return Expr();
    }
  });
}

ProlongedGenerator prolong(const Generator& g, const JetSpace& space, std::size_t order) {
  return ProlongedGenerator(g, space, order);
}

Expr apply_prolonged(ProlongedGenerator& pg, const Expr& e) { return pg.apply(e); }

Expr make_primitive(const Expr& e) {
  Expr c = clear_denominators(e);
  if (c.is_zero()) return c;
  Rational lead = c.terms()[0].coeff;
  return lead == 1 ? c : c * Expr(Rational(1) / lead);
}

namespace {

std::size_t system_order(const DESystem& sys) {
  std::size_t k = 1;
  for (const auto& f : sys.eqs) k = std::max(k, max_order(f));
  return k;
}

}  // namespace

DeterminingSystem determining_system(const DESystem& sys) {
  OrthonomicForm form = orthonomic(sys);
  DeterminingSystem ds;
  ds.space = sys.space;
  ds.params = sys.params;
  ds.unknowns = generic_unknowns(sys.space);
  ds.vars = sys.space.indep;
  ds.vars.insert(ds.vars.end(), sys.space.dep.begin(), sys.space.dep.end());
  ds.ansatz = generic_generator(sys.space);
  ProlongedGenerator pg(ds.ansatz, sys.space, system_order(sys));
  Reducer reducer(form);
  std::set<Expr, ExprLess> seen;
  for (const auto& f : sys.eqs) {
    Expr cond = reducer.reduce(pg.apply(f));
    for (const auto& part : split_coefficients(clear_denominators(cond), ds.unknowns)) {
      Expr eq = make_primitive(part.coefficient);
      if (!eq.is_zero() && seen.insert(eq).second) ds.eqs.push_back(eq);
    }
  }
  return ds;
}

std::vector<Expr> check_symmetry(const DESystem& sys, const OrthonomicForm& form, const Generator& g) {
  for (const auto& c : g.theta) {
    if (max_order(c) > 0) throw Error("generator coefficients must not depend on derivatives");
  }
  for (const auto& c : g.eta) {
    if (max_order(c) > 0) throw Error("generator coefficients must not depend on derivatives");
  }
  ProlongedGenerator pg(g, sys.space, system_order(sys));
  Reducer reducer(form);
  std::vector<Expr> out;
  for (const auto& f : sys.eqs) out.push_back(clear_denominators(reducer.reduce(pg.apply(f))));
  return out;
}

std::vector<Expr> check_symmetry(const DESystem& sys, const Generator& g) {
  return check_symmetry(sys, orthonomic(sys), g);
}

}  // namespace symkit
