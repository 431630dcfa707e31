#include "symkit/expr.hpp"

#include <algorithm>
#include <ostream>
#include <set>
#include <sstream>

namespace symkit {

namespace {

std::size_t hash_combine(std::size_t seed, std::size_t v) {
  return seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2));
}

std::size_t hash_rational(const Rational& q) {
  std::size_t h = mpz_get_ui(q.get_num_mpz_t());
  h = hash_combine(h, static_cast<std::size_t>(mpz_sgn(q.get_num_mpz_t()) + 1));
  return hash_combine(h, mpz_get_ui(q.get_den_mpz_t()));
}

int cmp_str(const std::string& a, const std::string& b) {
  int c = a.compare(b);
  return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

int cmp_strs(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (int c = cmp_str(a[i], b[i])) return c;
  }
  return 0;
}

Rational degree(const Monomial& m) {
  Rational d = 0;
  for (const auto& f : m) d += f.exp;
  return d;
}

Atom make_atom(AtomNode node) {
  std::size_t h = std::hash<int>{}(static_cast<int>(node.kind));
  h = hash_combine(h, std::hash<std::string>{}(node.name));
  for (const auto& a : node.args) h = hash_combine(h, std::hash<std::string>{}(a));
  for (const auto& a : node.index) h = hash_combine(h, std::hash<std::string>{}(a) * 31);
  h = hash_combine(h, static_cast<std::size_t>(node.tag));
  h = hash_combine(h, node.inner.hash());
  node.hash = h;
  return std::make_shared<const AtomNode>(std::move(node));
}

Monomial mul_mono(const Monomial& a, const Monomial& b) {
  Monomial out;
  out.reserve(a.size() + b.size());
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size()) {
      out.push_back(a[i++]);
    } else if (i == a.size()) {
      out.push_back(b[j++]);
    } else {
      int c = compare(a[i].atom, b[j].atom);
      if (c < 0) {
        out.push_back(a[i++]);
      } else if (c > 0) {
        out.push_back(b[j++]);
      } else {
        Rational e = a[i].exp + b[j].exp;
        if (e != 0) out.push_back({a[i].atom, e});
        ++i;
        ++j;
      }
    }
  }
  return out;
}

bool needs_expansion(const Factor& f) {
  return f.atom->kind == AtomKind::Pow && f.exp > 0 && is_integer(f.exp);
}

}  // namespace

std::string to_string(const Rational& q) { return q.get_str(); }

bool is_integer(const Rational& q) { return mpz_cmp_ui(q.get_den_mpz_t(), 1) == 0; }

const char* elem_name(ElemTag tag) {
  switch (tag) {
    case ElemTag::Exp: return "exp";
    case ElemTag::Ln: return "ln";
    case ElemTag::Sin: return "sin";
    case ElemTag::Cos: return "cos";
    case ElemTag::Tan: return "tan";
    case ElemTag::Sinh: return "sinh";
    case ElemTag::Cosh: return "cosh";
    case ElemTag::Tanh: return "tanh";
  }
  return "?";
}

std::optional<ElemTag> elem_from_name(const std::string& name) {
  static const std::pair<const char*, ElemTag> table[] = {
      {"exp", ElemTag::Exp},   {"ln", ElemTag::Ln},     {"log", ElemTag::Ln},
      {"sin", ElemTag::Sin},   {"cos", ElemTag::Cos},   {"tan", ElemTag::Tan},
      {"sinh", ElemTag::Sinh}, {"cosh", ElemTag::Cosh}, {"tanh", ElemTag::Tanh}};
  for (const auto& [n, t] : table) {
    if (name == n) return t;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Ordering

int compare(const Atom& a, const Atom& b) {
  if (a.get() == b.get()) return 0;
  if (a->kind != b->kind) return a->kind < b->kind ? -1 : 1;
  if (int c = cmp_str(a->name, b->name)) return c;
  if (int c = cmp_strs(a->index, b->index)) return c;
  if (int c = cmp_strs(a->args, b->args)) return c;
  if (a->tag != b->tag) return a->tag < b->tag ? -1 : 1;
  return compare(a->inner, b->inner);
}

bool atom_equal(const Atom& a, const Atom& b) {
  if (a.get() == b.get()) return true;
  if (a->hash != b->hash) return false;
  return compare(a, b) == 0;
}

// Graded: higher total degree first, then lexicographic on atoms.
int compare(const Monomial& a, const Monomial& b) {
  Rational da = degree(a), db = degree(b);
  if (da != db) return da > db ? -1 : 1;
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (int c = compare(a[i].atom, b[i].atom)) return c;
    if (a[i].exp != b[i].exp) return a[i].exp > b[i].exp ? -1 : 1;
  }
  if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
  return 0;
}

int compare(const Expr& a, const Expr& b) {
  const auto& ta = a.terms();
  const auto& tb = b.terms();
  if (&ta == &tb) return 0;
  if (ta.size() != tb.size()) return ta.size() < tb.size() ? -1 : 1;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (int c = compare(ta[i].mono, tb[i].mono)) return c;
    int c = cmp(ta[i].coeff, tb[i].coeff);
    if (c != 0) return c < 0 ? -1 : 1;
  }
  return 0;
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.rep_ == b.rep_) return true;
  if (a.hash() != b.hash()) return false;
  return compare(a, b) == 0;
}

// ---------------------------------------------------------------------------
// Term accumulation

class TermAccumulator {
 public:
  void add(const Rational& c, Monomial mono) {
    if (c == 0) return;
    for (std::size_t i = 0; i < mono.size(); ++i) {
      if (needs_expansion(mono[i])) {
        Expr base = mono[i].atom->inner;
        Rational k = mono[i].exp;
        mono.erase(mono.begin() + static_cast<std::ptrdiff_t>(i));
        Expr expanded = pow(base, k);
        for (const auto& t : expanded.terms()) add(c * t.coeff, mul_mono(mono, t.mono));
        return;
      }
    }
    auto [it, inserted] = terms_.try_emplace(std::move(mono), c);
    if (!inserted) it->second += c;
  }

  void add_expr(const Rational& c, const Monomial& mono, const Expr& e) {
    for (const auto& t : e.terms()) add(c * t.coeff, mul_mono(mono, t.mono));
  }

  Expr finish() {
    std::vector<Term> out;
    out.reserve(terms_.size());
    for (auto& [m, c] : terms_) {
      if (c != 0) out.push_back({c, m});
    }
    terms_.clear();
    return Expr::from_sorted(std::move(out));
  }

 private:
  std::map<Monomial, Rational, MonomialLess> terms_;
};

// ---------------------------------------------------------------------------
// Expr basics

Expr::Expr() : Expr(from_sorted({})) {}

Expr::Expr(long value) : Expr(Rational(value)) {}

Expr::Expr(const Rational& value) : Expr() {
  if (value != 0) *this = from_sorted({Term{value, {}}});
}

Expr Expr::from_sorted(std::vector<Term> terms) {
  auto rep = std::make_shared<Rep>();
  std::size_t h = 0x51ed;
  for (const auto& t : terms) {
    h = hash_combine(h, hash_rational(t.coeff));
    for (const auto& f : t.mono) {
      h = hash_combine(h, f.atom->hash);
      h = hash_combine(h, hash_rational(f.exp));
    }
  }
  rep->terms = std::move(terms);
  rep->hash = h;
  return Expr(std::shared_ptr<const Rep>(std::move(rep)));
}

Expr Expr::from_atom(const Atom& atom) {
  if (atom->kind == AtomKind::Pow) return atom->inner;
  return from_sorted({Term{Rational(1), {Factor{atom, Rational(1)}}}});
}

Expr Expr::from_terms(std::vector<Term> terms) {
  TermAccumulator acc;
  for (auto& t : terms) {
    Monomial m;
    for (auto& f : t.mono) {
      if (f.exp != 0) m = mul_mono(m, {f});
    }
    acc.add(t.coeff, std::move(m));
  }
  return acc.finish();
}

bool Expr::is_constant() const {
  return terms().empty() || (terms().size() == 1 && terms()[0].mono.empty());
}

std::optional<Rational> Expr::as_rational() const {
  if (terms().empty()) return Rational(0);
  if (terms().size() == 1 && terms()[0].mono.empty()) return terms()[0].coeff;
  return std::nullopt;
}

Atom Expr::as_atom() const {
  if (terms().size() != 1) return nullptr;
  const auto& t = terms()[0];
  if (t.coeff != 1 || t.mono.size() != 1 || t.mono[0].exp != 1) return nullptr;
  return t.mono[0].atom;
}

Expr monomial_expr(const Monomial& m) { return Expr::from_terms({Term{Rational(1), m}}); }

NodeKind Expr::kind() const {
  if (is_constant()) return NodeKind::RationalConstant;
  if (terms().size() > 1) return NodeKind::Sum;
  const auto& t = terms()[0];
  if (t.coeff != 1 || t.mono.size() > 1) return NodeKind::Product;
  if (t.mono[0].exp != 1) return NodeKind::Power;
  const auto& a = t.mono[0].atom;
  switch (a->kind) {
    case AtomKind::Param: return NodeKind::NamedParameter;
    case AtomKind::Indep: return NodeKind::IndepVar;
    case AtomKind::Dep: return NodeKind::DepVar;
    case AtomKind::Jet: return NodeKind::JetCoord;
    case AtomKind::Fn: return a->index.empty() ? NodeKind::UnknownFn : NodeKind::PartialDeriv;
    case AtomKind::Elem: return NodeKind::ElemFn;
    case AtomKind::DOp: return NodeKind::DOperator;
    case AtomKind::Pow: return NodeKind::Power;
  }
  return NodeKind::Product;
}

std::vector<Expr> Expr::children() const {
  std::vector<Expr> out;
  switch (kind()) {
    case NodeKind::Sum:
      for (const auto& t : terms()) out.push_back(from_terms({t}));
      break;
    case NodeKind::Product: {
      const auto& t = terms()[0];
      if (t.coeff != 1) out.emplace_back(t.coeff);
      for (const auto& f : t.mono) out.push_back(from_terms({Term{Rational(1), {f}}}));
      break;
    }
    case NodeKind::Power: {
      const auto& f = terms()[0].mono[0];
      out.push_back(f.atom->kind == AtomKind::Pow ? f.atom->inner : from_atom(f.atom));
      out.emplace_back(f.exp);
      break;
    }
    case NodeKind::ElemFn:
      out.push_back(terms()[0].mono[0].atom->inner);
      break;
    default:
      break;
  }
  return out;
}

Expr operator+(const Expr& a, const Expr& b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  const auto& ta = a.terms();
  const auto& tb = b.terms();
  std::vector<Term> out;
  out.reserve(ta.size() + tb.size());
  std::size_t i = 0, j = 0;
  while (i < ta.size() || j < tb.size()) {
    if (j == tb.size()) {
      out.push_back(ta[i++]);
    } else if (i == ta.size()) {
      out.push_back(tb[j++]);
    } else {
      int c = compare(ta[i].mono, tb[j].mono);
      if (c < 0) {
        out.push_back(ta[i++]);
      } else if (c > 0) {
        out.push_back(tb[j++]);
      } else {
        Rational s = ta[i].coeff + tb[j].coeff;
        if (s != 0) out.push_back({s, ta[i].mono});
        ++i;
        ++j;
      }
    }
  }
  return Expr::from_sorted(std::move(out));
}

namespace {
Expr scale(const Expr& a, const Rational& c) {
  if (c == 0) return Expr();
  if (c == 1) return a;
  std::vector<Term> out = a.terms();
  for (auto& t : out) t.coeff *= c;
  return Expr::from_terms(std::move(out));
}
}  // namespace

Expr operator-(const Expr& a) { return scale(a, Rational(-1)); }

Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }

Expr operator*(const Expr& a, const Expr& b) {
  if (a.is_zero() || b.is_zero()) return Expr();
  if (auto c = a.as_rational()) return scale(b, *c);
  if (auto c = b.as_rational()) return scale(a, *c);
  TermAccumulator acc;
  for (const auto& x : a.terms()) {
    for (const auto& y : b.terms()) acc.add(x.coeff * y.coeff, mul_mono(x.mono, y.mono));
  }
  return acc.finish();
}

Expr operator/(const Expr& a, const Expr& b) { return a * pow(b, Rational(-1)); }

Expr normalize(const Expr& e) { return Expr::from_terms(e.terms()); }

// ---------------------------------------------------------------------------
// Atoms

Atom param_atom(const std::string& name) {
  AtomNode n;
  n.kind = AtomKind::Param;
  n.name = name;
  return make_atom(std::move(n));
}

Atom indep_atom(const std::string& name) {
  AtomNode n;
  n.kind = AtomKind::Indep;
  n.name = name;
  return make_atom(std::move(n));
}

Atom dep_atom(const std::string& name) {
  AtomNode n;
  n.kind = AtomKind::Dep;
  n.name = name;
  return make_atom(std::move(n));
}

Atom jet_atom(const std::string& dep, std::vector<std::string> index) {
  if (index.empty()) return dep_atom(dep);
  std::sort(index.begin(), index.end());
  AtomNode n;
  n.kind = AtomKind::Jet;
  n.name = dep;
  n.index = std::move(index);
  return make_atom(std::move(n));
}

Atom fn_atom(const std::string& name, std::vector<std::string> args, std::vector<std::string> index) {
  std::sort(index.begin(), index.end());
  AtomNode n;
  n.kind = AtomKind::Fn;
  n.name = name;
  n.args = std::move(args);
  n.index = std::move(index);
  return make_atom(std::move(n));
}

Atom dop_atom(const std::string& var) {
  AtomNode n;
  n.kind = AtomKind::DOp;
  n.name = var;
  return make_atom(std::move(n));
}

Expr param(const std::string& name) { return Expr::from_atom(param_atom(name)); }
Expr indep(const std::string& name) { return Expr::from_atom(indep_atom(name)); }
Expr dep(const std::string& name) { return Expr::from_atom(dep_atom(name)); }
Expr jet(const std::string& d, std::vector<std::string> index) {
  return Expr::from_atom(jet_atom(d, std::move(index)));
}
Expr fn(const std::string& name, std::vector<std::string> args, std::vector<std::string> index) {
  return Expr::from_atom(fn_atom(name, std::move(args), std::move(index)));
}

namespace {

bool leading_negative(const Expr& e) { return !e.is_zero() && e.terms()[0].coeff < 0; }

Expr elem_raw(ElemTag tag, const Expr& arg) {
  AtomNode n;
  n.kind = AtomKind::Elem;
  n.tag = tag;
  n.inner = arg;
  return Expr::from_atom(make_atom(std::move(n)));
}

Expr pow_atom_raw(const Expr& base, const Rational& e) {
  AtomNode n;
  n.kind = AtomKind::Pow;
  n.inner = base;
  Atom a = make_atom(std::move(n));
  return Expr::from_terms({Term{Rational(1), {Factor{a, e}}}});
}

// Exact root of an integer, if it exists.
std::optional<mpz_class> exact_root(const mpz_class& v, unsigned long d) {
  if (v < 0) {
    if (d % 2 == 0) return std::nullopt;
    auto r = exact_root(-v, d);
    if (!r) return std::nullopt;
    return mpz_class(-*r);
  }
  mpz_class r;
  if (mpz_root(r.get_mpz_t(), v.get_mpz_t(), d) == 0) return std::nullopt;
  return r;
}

Rational int_pow(const Rational& c, long n) {
  Rational base = n < 0 ? Rational(1) / c : c;
  unsigned long k = static_cast<unsigned long>(n < 0 ? -n : n);
  mpz_class num, den;
  mpz_pow_ui(num.get_mpz_t(), base.get_num_mpz_t(), k);
  mpz_pow_ui(den.get_mpz_t(), base.get_den_mpz_t(), k);
  Rational out(num, den);
  out.canonicalize();
  return out;
}

Expr rational_pow(const Rational& c, const Rational& q) {
  if (c == 1) return Expr(1);
  if (is_integer(q)) {
    if (c == 0 && q < 0) throw Error("division by zero");
    return Expr(int_pow(c, q.get_num().get_si()));
  }
  if (c == 0) {
    if (q < 0) throw Error("division by zero");
    return Expr();
  }
  unsigned long d = q.get_den().get_ui();
  auto rn = exact_root(c.get_num(), d);
  auto rd = exact_root(c.get_den(), d);
  if (rn && rd) {
    Rational root(*rn, *rd);
    root.canonicalize();
    return Expr(int_pow(root, q.get_num().get_si()));
  }
  return pow_atom_raw(Expr(c), q);
}

}  // namespace

Expr elem(ElemTag tag, const Expr& arg) {
  switch (tag) {
    case ElemTag::Exp:
      if (arg.is_zero()) return Expr(1);
      if (leading_negative(arg)) return pow(elem_raw(tag, -arg), Rational(-1));
      return elem_raw(tag, arg);
    case ElemTag::Ln:
      if (arg == Expr(1)) return Expr();
      return elem_raw(tag, arg);
    case ElemTag::Cos:
    case ElemTag::Cosh:
      if (arg.is_zero()) return Expr(1);
      if (leading_negative(arg)) return elem_raw(tag, -arg);
      return elem_raw(tag, arg);
    case ElemTag::Sin:
    case ElemTag::Tan:
    case ElemTag::Sinh:
    case ElemTag::Tanh:
      if (arg.is_zero()) return Expr();
      if (leading_negative(arg)) return -elem_raw(tag, -arg);
      return elem_raw(tag, arg);
  }
  return elem_raw(tag, arg);
}

Expr pow(const Expr& base, const Rational& q) {
  if (q == 0) return Expr(1);
  if (q == 1) return base;
  if (base.is_zero()) {
    if (q < 0) throw Error("division by zero");
    return Expr();
  }
  if (base.is_monomial()) {
    const auto& t = base.terms()[0];
    Expr c = rational_pow(t.coeff, q);
    Monomial m;
    for (const auto& f : t.mono) m.push_back({f.atom, f.exp * q});
    // Factor order is preserved under scaling exponents.
    TermAccumulator acc;
    acc.add_expr(Rational(1), m, c);
    return acc.finish();
  }
  if (q > 0 && is_integer(q)) {
    unsigned long k = q.get_num().get_ui();
    Expr result(1), b = base;
    while (k > 0) {
      if (k & 1UL) result = result * b;
      k >>= 1UL;
      if (k > 0) b = b * b;
    }
    return result;
  }
  // Normalize the leading coefficient of the base to one.
  Rational lead = base.terms()[0].coeff;
  Expr unit = lead == 1 ? base : base * Expr(Rational(1) / lead);
  return rational_pow(lead, q) * pow_atom_raw(unit, q);
}

// ---------------------------------------------------------------------------
// Differentiation

Expr derive(const Expr& e, const LeafDerivative& leaf) {
  std::map<Atom, Expr, AtomLess> memo;
  std::function<Expr(const Expr&)> rec;
  auto atom_derivative = [&](const Atom& a) -> Expr {
    auto it = memo.find(a);
    if (it != memo.end()) return it->second;
    Expr d;
    if (a->kind == AtomKind::Elem) {
      Expr g = rec(a->inner);
      if (!g.is_zero()) {
        Expr self = Expr::from_atom(a);
        switch (a->tag) {
          case ElemTag::Exp: d = self * g; break;
          case ElemTag::Ln: d = g * pow(a->inner, Rational(-1)); break;
          case ElemTag::Sin: d = elem(ElemTag::Cos, a->inner) * g; break;
          case ElemTag::Cos: d = -(elem(ElemTag::Sin, a->inner) * g); break;
          case ElemTag::Tan: d = (Expr(1) + self * self) * g; break;
          case ElemTag::Sinh: d = elem(ElemTag::Cosh, a->inner) * g; break;
          case ElemTag::Cosh: d = elem(ElemTag::Sinh, a->inner) * g; break;
          case ElemTag::Tanh: d = (Expr(1) - self * self) * g; break;
        }
      }
    } else if (a->kind == AtomKind::Pow) {
      d = rec(a->inner);
    } else {
      d = leaf(a);
    }
    memo.emplace(a, d);
    return d;
  };
  rec = [&](const Expr& x) -> Expr {
    TermAccumulator acc;
    for (const auto& t : x.terms()) {
      for (std::size_t i = 0; i < t.mono.size(); ++i) {
        const Factor& f = t.mono[i];
        Expr d = atom_derivative(f.atom);
        if (d.is_zero()) continue;
        Monomial rest = t.mono;
        Rational e1 = f.exp - 1;
        if (e1 == 0) {
          rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
        } else {
          rest[i].exp = e1;
        }
        acc.add_expr(t.coeff * f.exp, rest, d);
      }
    }
    return acc.finish();
  };
  return rec(e);
}

Expr pdiff_var(const Expr& e, const std::string& var) {
  return derive(e, [&](const Atom& a) -> Expr {
    switch (a->kind) {
      case AtomKind::Param:
      case AtomKind::Indep:
      case AtomKind::Dep:
        return a->name == var ? Expr(1) : Expr();
      case AtomKind::Fn:
        if (std::find(a->args.begin(), a->args.end(), var) != a->args.end()) {
          auto idx = a->index;
          idx.push_back(var);
          return fn(a->name, a->args, std::move(idx));
        }
        return Expr();
      default:
        return Expr();
    }
  });
}

Expr pdiff(const Expr& e, const Atom& v) {
  if (v->kind == AtomKind::Param || v->kind == AtomKind::Indep || v->kind == AtomKind::Dep) {
    return pdiff_var(e, v->name);
  }
  return derive(e, [&](const Atom& a) -> Expr { return atom_equal(a, v) ? Expr(1) : Expr(); });
}

Expr pdiff(const Expr& e, const Expr& v) {
  Atom a = v.as_atom();
  if (!a) throw Error("pdiff: differentiation variable must be an atom");
  return pdiff(e, a);
}

// ---------------------------------------------------------------------------
// Substitution and traversal

namespace {

Expr substitute_with(const Expr& e, const std::function<std::optional<Expr>(const Atom&)>& lookup,
                     std::map<Atom, std::optional<Expr>, AtomLess>& memo) {
  std::function<std::optional<Expr>(const Atom&)> value_of = [&](const Atom& a) -> std::optional<Expr> {
    auto it = memo.find(a);
    if (it != memo.end()) return it->second;
    std::optional<Expr> v = lookup(a);
    if (!v && (a->kind == AtomKind::Elem || a->kind == AtomKind::Pow)) {
      Expr inner = substitute_with(a->inner, lookup, memo);
      if (!(inner == a->inner)) {
        v = a->kind == AtomKind::Elem ? elem(a->tag, inner) : inner;
      }
    }
    memo.emplace(a, v);
    return v;
  };
  bool changed = false;
  TermAccumulator acc;
  Expr result;
  std::vector<Term> untouched;
  for (const auto& t : e.terms()) {
    Monomial kept;
    Expr prod(t.coeff);
    bool term_changed = false;
    for (const auto& f : t.mono) {
      auto v = value_of(f.atom);
      if (v) {
        term_changed = true;
        prod = prod * pow(*v, f.exp);
      } else {
        kept.push_back(f);
      }
    }
    if (term_changed) {
      changed = true;
      acc.add_expr(Rational(1), kept, prod);
    } else {
      acc.add(t.coeff, t.mono);
    }
  }
  if (!changed) return e;
  return acc.finish();
}

}  // namespace

Expr substitute(const Expr& e, const Rules& rules) {
  if (rules.empty()) return e;
  std::map<Atom, std::optional<Expr>, AtomLess> memo;
  return substitute_with(
      e,
      [&](const Atom& a) -> std::optional<Expr> {
        auto it = rules.find(a);
        if (it == rules.end()) return std::nullopt;
        return it->second;
      },
      memo);
}

Expr substitute_function(const Expr& e, const std::string& name, const Expr& value) {
  std::map<Atom, std::optional<Expr>, AtomLess> memo;
  return substitute_with(
      e,
      [&](const Atom& a) -> std::optional<Expr> {
        if (a->kind != AtomKind::Fn || a->name != name) return std::nullopt;
        Expr v = value;
        for (const auto& var : a->index) v = pdiff_var(v, var);
        return v;
      },
      memo);
}

void for_each_atom(const Expr& e, const std::function<void(const Atom&)>& visit) {
  for (const auto& t : e.terms()) {
    for (const auto& f : t.mono) {
      visit(f.atom);
      if (f.atom->kind == AtomKind::Elem || f.atom->kind == AtomKind::Pow) {
        for_each_atom(f.atom->inner, visit);
      }
    }
  }
}

std::vector<Atom> atoms_of(const Expr& e) {
  std::set<Atom, AtomLess> seen;
  for_each_atom(e, [&](const Atom& a) { seen.insert(a); });
  return {seen.begin(), seen.end()};
}

bool contains_atom(const Expr& e, const std::function<bool(const Atom&)>& pred) {
  for (const auto& t : e.terms()) {
    for (const auto& f : t.mono) {
      if (pred(f.atom)) return true;
      if ((f.atom->kind == AtomKind::Elem || f.atom->kind == AtomKind::Pow) &&
          contains_atom(f.atom->inner, pred)) {
        return true;
      }
    }
  }
  return false;
}

std::vector<std::string> free_variables(const Expr& e) {
  std::set<std::string> vars;
  for_each_atom(e, [&](const Atom& a) {
    switch (a->kind) {
      case AtomKind::Param:
      case AtomKind::Indep:
      case AtomKind::Dep:
        vars.insert(a->name);
        break;
      case AtomKind::Fn:
        vars.insert(a->args.begin(), a->args.end());
        break;
      default:
        break;
    }
  });
  return {vars.begin(), vars.end()};
}

bool depends_on_variable(const Expr& e, const std::string& var) {
  return contains_atom(e, [&](const Atom& a) {
    switch (a->kind) {
      case AtomKind::Param:
      case AtomKind::Indep:
      case AtomKind::Dep:
        return a->name == var;
      case AtomKind::Fn:
        return std::find(a->args.begin(), a->args.end(), var) != a->args.end();
      default:
        return false;
    }
  });
}

Expr coefficient(const Expr& e, const Atom& atom, const Rational& k) {
  TermAccumulator acc;
  for (const auto& t : e.terms()) {
    Rational ex = 0;
    Monomial rest;
    for (const auto& f : t.mono) {
      if (atom_equal(f.atom, atom)) {
        ex = f.exp;
      } else {
        rest.push_back(f);
      }
    }
    if (ex == k) acc.add(t.coeff, std::move(rest));
  }
  return acc.finish();
}

Expr clear_denominators(const Expr& e) {
  Expr cur = e;
  for (int round = 0; round < 16; ++round) {
    std::map<Atom, Rational, AtomLess> worst;
    for (const auto& t : cur.terms()) {
      for (const auto& f : t.mono) {
        if (f.exp < 0) {
          auto [it, ins] = worst.try_emplace(f.atom, f.exp);
          if (!ins && f.exp < it->second) it->second = f.exp;
        }
      }
    }
    if (worst.empty()) return cur;
    Monomial m;
    for (const auto& [a, ex] : worst) m.push_back({a, -ex});
    TermAccumulator acc;
    for (const auto& t : cur.terms()) acc.add(t.coeff, mul_mono(t.mono, m));
    cur = acc.finish();
  }
  return cur;
}

bool is_zero_rational(const Expr& e) { return e.is_zero() || clear_denominators(e).is_zero(); }

std::vector<SplitEntry> split_on(const Expr& e, const std::function<bool(const Atom&)>& is_splitting) {
  std::map<Monomial, TermAccumulator, MonomialLess> groups;
  for (const auto& t : e.terms()) {
    Monomial key, rest;
    for (const auto& f : t.mono) {
      if (is_splitting(f.atom)) {
        if (!(f.exp > 0 && is_integer(f.exp))) {
          throw NonPolynomial("splitting atom " + to_string(f.atom) + " occurs with exponent " +
                              to_string(f.exp));
        }
        key.push_back(f);
      } else {
        if ((f.atom->kind == AtomKind::Elem || f.atom->kind == AtomKind::Pow) &&
            contains_atom(f.atom->inner, is_splitting)) {
          throw NonPolynomial("splitting atom occurs inside " + to_string(f.atom));
        }
        rest.push_back(f);
      }
    }
    groups[key].add(t.coeff, std::move(rest));
  }
  std::vector<SplitEntry> out;
  for (auto& [m, acc] : groups) {
    Expr c = acc.finish();
    if (!c.is_zero()) out.push_back({m, c});
  }
  return out;
}

std::vector<SplitEntry> split_coefficients(const Expr& e, const std::vector<std::string>& unknowns) {
  std::set<std::string> bound;
  for_each_atom(e, [&](const Atom& a) {
    if (a->kind == AtomKind::Fn &&
        (unknowns.empty() || std::find(unknowns.begin(), unknowns.end(), a->name) != unknowns.end())) {
      bound.insert(a->args.begin(), a->args.end());
    }
  });
  return split_on(e, [&](const Atom& a) {
    if (a->kind == AtomKind::Jet) return true;
    if (a->kind == AtomKind::Indep || a->kind == AtomKind::Dep) return bound.count(a->name) == 0;
    return false;
  });
}

// ---------------------------------------------------------------------------
// Printing

namespace {

void print_expr(std::ostream& os, const Expr& e);

void print_atom(std::ostream& os, const Atom& a) {
  switch (a->kind) {
    case AtomKind::Param:
    case AtomKind::Indep:
    case AtomKind::Dep:
      os << a->name;
      break;
    case AtomKind::Jet:
      os << "diff(" << a->name;
      for (const auto& i : a->index) os << ',' << i;
      os << ')';
      break;
    case AtomKind::Fn: {
      std::ostringstream f;
      f << a->name;
      if (!a->args.empty()) {
        f << '(';
        for (std::size_t i = 0; i < a->args.size(); ++i) f << (i ? "," : "") << a->args[i];
        f << ')';
      }
      if (a->index.empty()) {
        os << f.str();
      } else {
        os << "diff(" << f.str();
        for (const auto& i : a->index) os << ',' << i;
        os << ')';
      }
      break;
    }
    case AtomKind::Elem:
      os << elem_name(a->tag) << '(';
      print_expr(os, a->inner);
      os << ')';
      break;
    case AtomKind::Pow:
      os << '(';
      print_expr(os, a->inner);
      os << ')';
      break;
    case AtomKind::DOp:
      os << "D[" << a->name << ']';
      break;
  }
}

void print_monomial(std::ostream& os, const Monomial& m) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i) os << '*';
    const Rational& e = m[i].exp;
    if (m[i].atom->kind == AtomKind::Elem && m[i].atom->tag == ElemTag::Exp && e == -1) {
      // exp(a)^(-1) prints as exp(-a), which parses back to the same form
      os << "exp(";
      print_expr(os, Expr(e) * m[i].atom->inner);
      os << ')';
      continue;
    }
    print_atom(os, m[i].atom);
    if (e != 1) {
      if (e > 0 && is_integer(e)) {
        os << '^' << e.get_str();
      } else {
        os << "^(" << e.get_str() << ')';
      }
    }
  }
}

void print_expr(std::ostream& os, const Expr& e) {
  if (e.is_zero()) {
    os << '0';
    return;
  }
  bool first = true;
  for (const auto& t : e.terms()) {
    Rational c = t.coeff;
    if (first) {
      if (c < 0) os << '-';
    } else {
      os << (c < 0 ? " - " : " + ");
    }
    first = false;
    Rational ac = abs(c);
    if (t.mono.empty()) {
      os << ac.get_str();
    } else {
      if (ac != 1) os << ac.get_str() << '*';
      print_monomial(os, t.mono);
    }
  }
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print_expr(os, e);
  return os.str();
}

std::string to_string(const Atom& a) {
  std::ostringstream os;
  print_atom(os, a);
  return os.str();
}

std::ostream& operator<<(std::ostream& os, const Expr& e) {
  print_expr(os, e);
  return os;
}

}  // namespace symkit
