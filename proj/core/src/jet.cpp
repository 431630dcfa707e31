#include "symkit/jet.hpp"

#include <algorithm>

namespace symkit {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

// True when multiset `sub` is contained in multiset `super` (both sorted).
bool multiset_includes(const std::vector<std::string>& super, const std::vector<std::string>& sub) {
  return std::includes(super.begin(), super.end(), sub.begin(), sub.end());
}

std::vector<std::string> multiset_minus(const std::vector<std::string>& super, const std::vector<std::string>& sub) {
  std::vector<std::string> out;
  std::set_difference(super.begin(), super.end(), sub.begin(), sub.end(), std::back_inserter(out));
  return out;
}

}  // namespace

bool JetSpace::is_indep(const std::string& n) const { return contains(indep, n); }
bool JetSpace::is_dep(const std::string& n) const { return contains(dep, n); }

DESystem DESystem::from_program(const Program& prog) {
  DESystem sys;
  sys.space.indep = prog.decl.indep;
  sys.space.dep = prog.decl.dep;
  sys.params = prog.decl.params;
  for (const auto& eq : prog.equations) sys.eqs.push_back(eq.residual());
  return sys;
}

bool is_jet_atom(const Atom& a) { return a->kind == AtomKind::Dep || a->kind == AtomKind::Jet; }

std::size_t jet_order(const Atom& a) { return a->kind == AtomKind::Jet ? a->index.size() : 0; }

std::size_t max_order(const Expr& e) {
  std::size_t k = 0;
  for_each_atom(e, [&](const Atom& a) {
    if (is_jet_atom(a)) k = std::max(k, jet_order(a));
  });
  return k;
}

Expr total_derivative(const Expr& e, const std::string& x, const JetSpace& space) {
  auto d_of_var = [&](const std::string& v) -> Expr {
    if (v == x) return Expr(1);
    if (space.is_dep(v)) return jet(v, {x});
    return Expr();
  };
  return derive(e, [&](const Atom& a) -> Expr {
    switch (a->kind) {
      case AtomKind::Indep:
        return a->name == x ? Expr(1) : Expr();
      case AtomKind::Dep:
        return jet(a->name, {x});
      case AtomKind::Jet: {
        auto idx = a->index;
        idx.push_back(x);
        return jet(a->name, std::move(idx));
      }
      case AtomKind::Fn: {
        Expr sum;
        for (const auto& arg : a->args) {
          Expr d = d_of_var(arg);
          if (d.is_zero()) continue;
          auto idx = a->index;
          idx.push_back(arg);
          sum += fn(a->name, a->args, std::move(idx)) * d;
        }
        return sum;
      }
      default:
        return Expr();
    }
  });
}

Expr total_derivative(const Expr& e, const std::vector<std::string>& index, const JetSpace& space) {
  Expr out = e;
  for (const auto& x : index) out = total_derivative(out, x, space);
  return out;
}

int Ranking::compare(const Atom& a, const Atom& b) const {
  std::size_t oa = jet_order(a), ob = jet_order(b);
  if (oa != ob) return oa < ob ? -1 : 1;
  for (const auto& x : space_.indep) {
    auto ca = std::count(a->index.begin(), a->index.end(), x);
    auto cb = std::count(b->index.begin(), b->index.end(), x);
    if (ca != cb) return ca < cb ? -1 : 1;
  }
  auto ia = std::find(space_.dep.begin(), space_.dep.end(), a->name) - space_.dep.begin();
  auto ib = std::find(space_.dep.begin(), space_.dep.end(), b->name) - space_.dep.begin();
  if (ia != ib) return ia > ib ? -1 : 1;
  return 0;
}

namespace {

// Solves `eq` for its highest-ranked jet coordinate.
std::pair<Atom, Expr> isolate_leader(const Expr& eq, const Ranking& ranking) {
  Atom leader;
  for_each_atom(eq, [&](const Atom& a) {
    if (is_jet_atom(a) && (!leader || ranking.compare(a, leader) > 0)) leader = a;
  });
  if (!leader) {
    throw NotOrthonomic("equation " + to_string(eq) + " contains no dependent variable");
  }
  bool linear = true;
  for (const auto& t : eq.terms()) {
    for (const auto& f : t.mono) {
      if (atom_equal(f.atom, leader)) {
        if (f.exp != 1) linear = false;
      } else if ((f.atom->kind == AtomKind::Elem || f.atom->kind == AtomKind::Pow) &&
                 contains_atom(f.atom->inner, [&](const Atom& a) { return atom_equal(a, leader); })) {
        linear = false;
      }
    }
  }
  Expr c = coefficient(eq, leader, 1);
  if (!linear || c.is_zero()) {
    throw NotOrthonomic("cannot isolate leading derivative " + to_string(leader) + " in " + to_string(eq));
  }
  Expr rest = coefficient(eq, leader, 0);
  return {leader, -rest / c};
}

}  // namespace

OrthonomicForm orthonomic(const DESystem& sys) {
  Ranking ranking(sys.space);
  OrthonomicForm form;
  form.space = sys.space;
  std::vector<Expr> pending(sys.eqs.rbegin(), sys.eqs.rend());
  std::size_t guard = 0;
  while (!pending.empty()) {
    if (++guard > 10000) throw NotOrthonomic("orthonomic reduction did not terminate");
    Expr eq = pending.back();
    pending.pop_back();
    eq = clear_denominators(reduce_modulo(eq, form));
    if (eq.is_zero()) continue;
    auto [leader, rhs] = isolate_leader(eq, ranking);
    // Rules whose leader is a derivative of the new leader become equations again.
    for (auto it = form.rules.begin(); it != form.rules.end();) {
      const Atom& l = it->first;
      if (l->name == leader->name && multiset_includes(l->index, leader->index)) {
        pending.push_back(Expr::from_atom(l) - it->second);
        it = form.rules.erase(it);
      } else {
        ++it;
      }
    }
    form.rules.emplace(leader, rhs);
    for (bool changed = true; changed;) {
      changed = false;
      Reducer reducer(form);
      std::map<Atom, Expr, AtomLess> next;
      for (const auto& [l, r] : form.rules) {
        Expr nr = reducer.reduce(r);
        if (nr != r) changed = true;
        next.emplace(l, nr);
      }
      form.rules = std::move(next);
    }
  }
  return form;
}

Expr Reducer::reduce_jet(const Atom& j) {
  auto it = cache_.find(j);
  if (it != cache_.end()) return it->second;
  Expr value = Expr::from_atom(j);
  for (const auto& [leader, rhs] : form_.rules) {
    if (leader->name != j->name || !multiset_includes(j->index, leader->index)) continue;
    if (leader->index.size() == j->index.size()) {
      value = reduce(rhs);
    } else {
      auto extra = multiset_minus(j->index, leader->index);
      auto lower_index = j->index;
      lower_index.erase(std::find(lower_index.begin(), lower_index.end(), extra.front()));
      Expr lower = reduce_jet(jet_atom(j->name, lower_index));
      value = reduce(total_derivative(lower, extra.front(), form_.space));
    }
    break;
  }
  cache_.emplace(j, value);
  return value;
}

Expr Reducer::reduce(const Expr& e) {
  Rules rules;
  for_each_atom(e, [&](const Atom& a) {
    if (!is_jet_atom(a) || rules.count(a)) return;
    Expr r = reduce_jet(a);
    if (r.as_atom() == nullptr || !atom_equal(r.as_atom(), a)) rules.emplace(a, r);
  });
  return substitute(e, rules);
}

Expr reduce_modulo(const Expr& e, const OrthonomicForm& form) {
  Reducer r(form);
  return r.reduce(e);
}

}  // namespace symkit
