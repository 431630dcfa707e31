#include "symkit/qp.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>

#include "symkit/liealg.hpp"

namespace symkit {

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

Expr monomial_in(const std::vector<std::string>& names, const Vec& exps) {
  Expr m(1);
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (exps[k] != 0) m *= pow(dep(names[k]), exps[k]);
  }
  return m;
}

bool is_zero_vec(const Vec& v) {
  return std::all_of(v.begin(), v.end(), [](const Rational& q) { return q == 0; });
}

}  // namespace

// ---------------------------------------------------------------------------
// QPSystem

std::optional<std::size_t> QPSystem::constant_monomial() const {
  for (std::size_t j = 0; j < B.size(); ++j) {
    if (is_zero_vec(B[j])) return j;
  }
  return std::nullopt;
}

Expr QPSystem::monomial(std::size_t j) const { return monomial_in(vars, B[j]); }

std::vector<Expr> QPSystem::rhs() const {
  std::vector<Expr> out;
  for (std::size_t i = 0; i < n(); ++i) {
    Expr s;
    for (std::size_t j = 0; j < m(); ++j) s += A[i][j] * monomial(j);
    out.push_back(dep(vars[i]) * s);
  }
  return out;
}

Expr QPSystem::time_derivative(const Expr& e) const {
  auto r = rhs();
  Expr out = pdiff_var(e, time);
  for (std::size_t k = 0; k < n(); ++k) {
    Expr d = pdiff_var(e, vars[k]);
    if (!d.is_zero()) out += d * r[k];
  }
  return out;
}

Declarations QPSystem::decl() const {
  Declarations d;
  d.indep = {time};
  d.dep = vars;
  d.params = params;
  return d;
}

JetSpace QPSystem::space() const { return JetSpace{{time}, vars}; }

bool QPSystem::has_parameters() const {
  for (const auto& row : A) {
    for (const auto& e : row) {
      if (!e.as_rational() && !e.is_zero()) return true;
    }
  }
  return false;
}

QPSystem qp_from_equations(const std::vector<std::string>& vars, const std::vector<std::string>& params,
                           const std::vector<Expr>& rhs, const std::string& time) {
  if (rhs.size() != vars.size()) throw Error("need one right-hand side per variable");
  QPSystem sys;
  sys.vars = vars;
  sys.params = params;
  sys.time = time;
  std::vector<Vec> monos;
  std::vector<std::map<std::size_t, Expr>> coeffs(vars.size());
  for (std::size_t i = 0; i < vars.size(); ++i) {
    Expr q = rhs[i] * pow(dep(vars[i]), Rational(-1));
    for (const auto& t : q.terms()) {
      Vec exps(vars.size());
      Expr c(t.coeff);
      for (const auto& f : t.mono) {
        const Atom& a = f.atom;
        auto it = std::find(vars.begin(), vars.end(), a->name);
        if ((a->kind == AtomKind::Dep || a->kind == AtomKind::Indep) && it != vars.end()) {
          exps[static_cast<std::size_t>(it - vars.begin())] += f.exp;
        } else if (a->kind == AtomKind::Param) {
          c *= pow(Expr::from_atom(a), f.exp);
        } else {
          throw Error("right-hand side of " + vars[i] + "' is not quasi-polynomial: " + to_string(rhs[i]));
        }
      }
      auto pos = std::find(monos.begin(), monos.end(), exps);
      std::size_t j = static_cast<std::size_t>(pos - monos.begin());
      if (pos == monos.end()) monos.push_back(exps);
      coeffs[i][j] += c;
    }
  }
  // Constant monomial last.
  std::vector<std::size_t> order;
  for (std::size_t j = 0; j < monos.size(); ++j) {
    if (!is_zero_vec(monos[j])) order.push_back(j);
  }
  for (std::size_t j = 0; j < monos.size(); ++j) {
    if (is_zero_vec(monos[j])) order.push_back(j);
  }
  for (auto j : order) sys.B.push_back(monos[j]);
  sys.A.assign(vars.size(), std::vector<Expr>(order.size()));
  for (std::size_t i = 0; i < vars.size(); ++i) {
    for (std::size_t jj = 0; jj < order.size(); ++jj) {
      auto it = coeffs[i].find(order[jj]);
      if (it != coeffs[i].end()) sys.A[i][jj] = it->second;
    }
  }
  return sys;
}

QPSystem qp_from_program(const Program& prog) {
  if (prog.decl.indep.size() != 1) throw Error("a quasi-polynomial system needs exactly one independent variable");
  const std::string& time = prog.decl.indep[0];
  std::vector<Expr> rhs(prog.decl.dep.size());
  std::vector<bool> seen(prog.decl.dep.size(), false);
  for (const auto& eq : prog.equations) {
    Atom a = eq.lhs.as_atom();
    if (!a || a->kind != AtomKind::Jet || a->index.size() != 1) {
      throw Error("equations must have the form diff(x," + time + ") = rhs");
    }
    auto it = std::find(prog.decl.dep.begin(), prog.decl.dep.end(), a->name);
    std::size_t k = static_cast<std::size_t>(it - prog.decl.dep.begin());
    if (seen[k]) throw Error("two equations for " + a->name);
    if (max_order(eq.rhs) > 0) throw Error("right-hand sides must not contain derivatives");
    if (depends_on_variable(eq.rhs, time)) throw Error("non-autonomous right-hand side");
    seen[k] = true;
    rhs[k] = eq.rhs;
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) throw Error("missing equation for " + prog.decl.dep[k]);
  }
  return qp_from_equations(prog.decl.dep, prog.decl.params, rhs, time);
}

QPSystem qp_from_json(const nlohmann::json& j) {
  QPSystem sys;
  sys.vars = j.at("vars").get<std::vector<std::string>>();
  if (j.contains("params")) sys.params = j.at("params").get<std::vector<std::string>>();
  if (j.contains("time")) sys.time = j.at("time").get<std::string>();
  Declarations decl = sys.decl();
  auto entry = [&](const nlohmann::json& v) -> Expr {
    if (v.is_number_integer()) return Expr(Rational(v.get<long>()));
    if (v.is_string()) return parse_expr(v.get<std::string>(), decl);
    throw Error("matrix entries must be integers or strings");
  };
  for (const auto& row : j.at("B")) {
    Vec r;
    for (const auto& v : row) {
      auto q = entry(v).as_rational();
      if (!q) throw Error("exponents must be rational constants");
      r.push_back(*q);
    }
    if (r.size() != sys.n()) throw Error("each row of B needs one exponent per variable");
    sys.B.push_back(r);
  }
  for (const auto& row : j.at("A")) {
    std::vector<Expr> r;
    for (const auto& v : row) r.push_back(entry(v));
    if (r.size() != sys.m()) throw Error("each row of A needs one entry per quasi-monomial");
    sys.A.push_back(r);
  }
  if (sys.A.size() != sys.n()) throw Error("A needs one row per variable");
  return sys;
}

nlohmann::json to_json(const QPSystem& sys) {
  nlohmann::json j;
  j["vars"] = sys.vars;
  j["params"] = sys.params;
  j["time"] = sys.time;
  j["A"] = nlohmann::json::array();
  for (const auto& row : sys.A) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& e : row) r.push_back(to_string(e));
    j["A"].push_back(r);
  }
  j["B"] = nlohmann::json::array();
  for (const auto& row : sys.B) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& q : row) r.push_back(q.get_str());
    j["B"].push_back(r);
  }
  return j;
}

// ---------------------------------------------------------------------------
// Lotka-Volterra form

Expr LVForm::y_in_x(std::size_t i) const { return monomial_in(x, B[i]); }

Expr LVForm::to_x(const Expr& e) const {
  Rules r;
  for (std::size_t i = 0; i < m(); ++i) r.emplace(dep_atom(y[i]), y_in_x(i));
  return substitute(e, r);
}

Expr LVForm::linear(const std::vector<Expr>& c) const {
  Expr s;
  for (std::size_t j = 0; j < m(); ++j) s += c[j] * y_var(j);
  return s;
}

Expr LVForm::lv_rhs(std::size_t i) const {
  Expr s;
  for (std::size_t j = 0; j < m(); ++j) s += M[i][j] * y_var(j);
  return y_var(i) * s;
}

JetSpace LVForm::space() const { return JetSpace{{time}, y}; }

Generator LVForm::flow() const {
  Generator g = zero_generator(space());
  for (std::size_t i = 0; i < m(); ++i) g.eta[i] = lv_rhs(i);
  return g;
}

Matrix LVForm::rational_M() const {
  Matrix out(m(), m());
  for (std::size_t i = 0; i < m(); ++i) {
    for (std::size_t j = 0; j < m(); ++j) {
      auto q = M[i][j].is_zero() ? std::optional<Rational>(0) : M[i][j].as_rational();
      if (!q) throw ParameterBearing("M(" + std::to_string(i + 1) + "," + std::to_string(j + 1) + ") = " +
                                     to_string(M[i][j]) + " is not a rational number");
      out(i, j) = *q;
    }
  }
  return out;
}

LVForm to_lv(const QPSystem& sys) {
  LVForm lv;
  lv.x = sys.vars;
  lv.time = sys.time;
  std::vector<Vec> rows;
  std::vector<std::vector<Expr>> acols;  // column j of A
  auto constant = sys.constant_monomial();
  for (std::size_t j = 0; j < sys.m(); ++j) {
    if (constant && j == *constant) continue;
    rows.push_back(sys.B[j]);
    std::vector<Expr> col;
    for (std::size_t i = 0; i < sys.n(); ++i) col.push_back(sys.A[i][j]);
    acols.push_back(col);
  }
  // Unit monomials x_k until the exponents have full rank, so x can be recovered.
  auto rank_of = [&](const std::vector<Vec>& r) { return r.empty() ? 0 : rank(Matrix::from_rows(r)); };
  for (std::size_t k = 0; k < sys.n() && rank_of(rows) < sys.n(); ++k) {
    Vec e(sys.n());
    e[k] = 1;
    auto trial = rows;
    trial.push_back(e);
    if (rank_of(trial) > rank_of(rows)) {
      rows.push_back(e);
      acols.push_back(std::vector<Expr>(sys.n()));
      ++lv.padded;
    }
  }
  if (constant) {
    rows.push_back(sys.B[*constant]);
    std::vector<Expr> col;
    for (std::size_t i = 0; i < sys.n(); ++i) col.push_back(sys.A[i][*constant]);
    acols.push_back(col);
    lv.constant = rows.size() - 1;
  }
  lv.B = rows;
  std::size_t m = rows.size();
  lv.M.assign(m, std::vector<Expr>(m));
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      Expr s;
      for (std::size_t k = 0; k < sys.n(); ++k) {
        if (rows[i][k] != 0) s += Expr(rows[i][k]) * acols[j][k];
      }
      lv.M[i][j] = s;
    }
  }
  // Names y1..ym, avoiding clashes with the system's symbols.
  std::vector<std::string> taken = sys.vars;
  taken.insert(taken.end(), sys.params.begin(), sys.params.end());
  taken.push_back(sys.time);
  for (const char* prefix : {"y", "w", "z", "Y", "lv_y"}) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < m; ++i) names.push_back(prefix + std::to_string(i + 1));
    if (std::none_of(names.begin(), names.end(), [&](const std::string& s) { return contains(taken, s); })) {
      lv.y = names;
      break;
    }
  }
  if (lv.y.size() != m) throw Error("cannot name Lotka-Volterra variables");
  // Back map from n independent rows.
  std::vector<std::size_t> chosen;
  std::vector<Vec> basis;
  for (std::size_t i = 0; i < m && chosen.size() < sys.n(); ++i) {
    auto trial = basis;
    trial.push_back(rows[i]);
    if (rank(Matrix::from_rows(trial)) > basis.size()) {
      basis.push_back(rows[i]);
      chosen.push_back(i);
    }
  }
  if (chosen.size() == sys.n() && sys.n() > 0) {
    auto inv = inverse(Matrix::from_rows(basis));
    if (inv) {
      Matrix back(sys.n(), m);
      for (std::size_t k = 0; k < sys.n(); ++k) {
        for (std::size_t r = 0; r < chosen.size(); ++r) back(k, chosen[r]) = (*inv)(k, r);
      }
      lv.back = back;
    }
  }
  return lv;
}

// ---------------------------------------------------------------------------
// Exact linear algebra over Q[parameters]; parameters are treated as generic,
// so a symbolic pivot counts as nonzero.

namespace {

using ExprVec = std::vector<Expr>;

class ExprMatrix {
 public:
  ExprMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols) {}
  static ExprMatrix from_rows(const std::vector<ExprVec>& rows) {
    ExprMatrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < m.rows_; ++i) {
      for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
    }
    return m;
  }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  Expr& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const Expr& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  std::optional<Matrix> rational() const {
    Matrix q(rows_, cols_);
    for (std::size_t k = 0; k < a_.size(); ++k) {
      if (a_[k].is_zero()) continue;
      auto r = a_[k].as_rational();
      if (!r) return std::nullopt;
      q(k / cols_, k % cols_) = *r;
    }
    return q;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<Expr> a_;
};

bool better_pivot(const Expr& a, const Expr& b) {
  bool ra = a.as_rational().has_value(), rb = b.as_rational().has_value();
  if (ra != rb) return ra;
  return a.size() < b.size();
}

// Fraction-free Gauss-Jordan in place; returns pivot columns (row k holds pivot k).
std::vector<std::size_t> eliminate(ExprMatrix& m) {
  std::vector<std::size_t> pivots;
  std::size_t r = 0;
  for (std::size_t c = 0; c < m.cols() && r < m.rows(); ++c) {
    std::optional<std::size_t> best;
    for (std::size_t i = r; i < m.rows(); ++i) {
      if (!m(i, c).is_zero() && (!best || better_pivot(m(i, c), m(*best, c)))) best = i;
    }
    if (!best) continue;
    if (*best != r) {
      for (std::size_t k = 0; k < m.cols(); ++k) std::swap(m(r, k), m(*best, k));
    }
    if (auto q = m(r, c).as_rational()) {
      Expr inv(Rational(1) / *q);
      for (std::size_t k = 0; k < m.cols(); ++k) m(r, k) = m(r, k) * inv;
    }
    Expr piv = m(r, c);
    bool unit = piv == Expr(1);
    for (std::size_t i = 0; i < m.rows(); ++i) {
      if (i == r || m(i, c).is_zero()) continue;
      Expr f = m(i, c);
      for (std::size_t k = 0; k < m.cols(); ++k) {
        m(i, k) = unit ? m(i, k) - f * m(r, k) : piv * m(i, k) - f * m(r, k);
      }
    }
    pivots.push_back(c);
    ++r;
  }
  return pivots;
}

Expr scaled(const Expr& e) {
  if (e.is_zero()) return e;
  Rational lead = e.terms()[0].coeff;
  return lead == 1 ? e : e * Expr(Rational(1) / lead);
}

std::vector<ExprVec> nullspace(const ExprMatrix& in) {
  std::vector<ExprVec> out;
  if (auto q = in.rational()) {
    for (const auto& v : symkit::nullspace(*q)) {
      ExprVec e;
      for (const auto& x : v) e.push_back(Expr(x));
      out.push_back(e);
    }
    return out;
  }
  ExprMatrix m = in;
  auto pivots = eliminate(m);
  std::vector<bool> is_pivot(m.cols(), false);
  for (auto c : pivots) is_pivot[c] = true;
  for (std::size_t f = 0; f < m.cols(); ++f) {
    if (is_pivot[f]) continue;
    ExprVec v(m.cols());
    std::vector<std::size_t> used;
    for (std::size_t k = 0; k < pivots.size(); ++k) {
      if (!m(k, f).is_zero()) used.push_back(k);
    }
    Expr L(1);
    for (auto k : used) L *= m(k, pivots[k]);
    v[f] = L;
    for (auto k : used) {
      Expr others(1);
      for (auto l : used) {
        if (l != k) others *= m(l, pivots[l]);
      }
      v[pivots[k]] = -m(k, f) * others;
    }
    // Scale by the first entry's leading coefficient.
    for (const auto& e : v) {
      if (e.is_zero()) continue;
      Expr s(Rational(1) / e.terms()[0].coeff);
      for (auto& x : v) x = x * s;
      break;
    }
    out.push_back(v);
  }
  return out;
}

std::size_t rank_of(const std::vector<ExprVec>& vecs) {
  if (vecs.empty()) return 0;
  auto m = ExprMatrix::from_rows(vecs);
  if (auto q = m.rational()) return rank(*q);
  return eliminate(m).size();
}

// Rational q with a = q*b, if there is one.
std::optional<Rational> rational_ratio(const Expr& a, const Expr& b) {
  if (a.is_zero()) return Rational(0);
  if (b.is_zero()) return std::nullopt;
  Rational q = a.terms()[0].coeff / b.terms()[0].coeff;
  if ((a - Expr(q) * b).is_zero()) return q;
  return std::nullopt;
}

std::optional<Vec> rational_ratio(const ExprVec& v, const Expr& d) {
  Vec out;
  for (const auto& e : v) {
    auto q = rational_ratio(e, d);
    if (!q) return std::nullopt;
    out.push_back(*q);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Homogeneous polynomials in the LV variables

using Exponent = std::vector<int>;

std::vector<Exponent> exponents(std::size_t m, int degree) {
  std::vector<Exponent> out;
  if (m == 0) {
    if (degree == 0) out.push_back({});
    return out;
  }
  Exponent cur(m, 0);
  std::function<void(std::size_t, int)> rec = [&](std::size_t i, int left) {
    if (i + 1 == m) {
      cur[i] = left;
      out.push_back(cur);
      return;
    }
    for (int k = left; k >= 0; --k) {
      cur[i] = k;
      rec(i + 1, left - k);
    }
  };
  rec(0, degree);
  return out;
}

std::map<Exponent, std::size_t> index_of(const std::vector<Exponent>& es) {
  std::map<Exponent, std::size_t> idx;
  for (std::size_t i = 0; i < es.size(); ++i) idx[es[i]] = i;
  return idx;
}

Expr poly_expr(const LVForm& lv, const std::vector<Exponent>& es, const ExprVec& c) {
  Expr s;
  for (std::size_t a = 0; a < es.size(); ++a) {
    if (c[a].is_zero()) continue;
    Expr mono = c[a];
    for (std::size_t i = 0; i < es[a].size(); ++i) {
      if (es[a][i]) mono *= pow(lv.y_var(i), Rational(es[a][i]));
    }
    s += mono;
  }
  return s;
}

Vec to_vec(const Exponent& e) { return Vec(e.begin(), e.end()); }

// (w M)_j
ExprVec weight_times_M(const Vec& w, const LVForm& lv) {
  ExprVec out(lv.m());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0) continue;
    for (std::size_t j = 0; j < lv.m(); ++j) out[j] += Expr(w[i]) * lv.M[i][j];
  }
  return out;
}

constexpr std::size_t kMaxCandidates = 200000;

using Candidates = std::vector<std::set<Expr, ExprLess>>;

// Calls visit(lambda) for every combination of per-coordinate candidates.
void for_each_lambda(const Candidates& cands, const std::function<void(const ExprVec&)>& visit) {
  std::size_t total = 1;
  for (const auto& c : cands) {
    total *= std::max<std::size_t>(c.size(), 1);
    if (total > kMaxCandidates) throw Error("eigenvalue search space too large; lower the degree");
  }
  ExprVec cur(cands.size());
  std::function<void(std::size_t)> rec = [&](std::size_t j) {
    if (j == cands.size()) {
      visit(cur);
      return;
    }
    for (const auto& v : cands[j]) {
      cur[j] = v;
      rec(j + 1);
    }
  };
  rec(0);
}

struct Kernel {
  ExprVec lambda;
  std::vector<ExprVec> basis;
};

ExprVec add(const ExprVec& a, const ExprVec& b) {
  ExprVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

ExprVec sub(const ExprVec& a, const ExprVec& b) {
  ExprVec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

// Semi-invariant kernels of each homogeneous degree 0..p. A kernel is the
// solution space of f' = (lambda . y) f for one eigenvalue. By comparing the
// coefficients at the extreme monomials, lambda_j must equal (alpha M)_j for
// some exponent alpha of the polynomial, so the candidates are finite.
std::vector<std::vector<Kernel>> darboux_kernels(const LVForm& lv, int p) {
  std::size_t m = lv.m();
  std::vector<std::vector<Kernel>> out(static_cast<std::size_t>(p) + 1);
  out[0].push_back({ExprVec(m), {ExprVec{Expr(1)}}});
  for (int d = 1; d <= p; ++d) {
    auto cols = exponents(m, d);
    auto rows = exponents(m, d + 1);
    auto row_idx = index_of(rows);
    std::vector<ExprVec> am;
    for (const auto& a : cols) am.push_back(weight_times_M(to_vec(a), lv));
    Candidates cands(m);
    for (std::size_t j = 0; j < m; ++j) {
      for (const auto& v : am) cands[j].insert(v[j]);
    }
    for_each_lambda(cands, [&](const ExprVec& lambda) {
      ExprMatrix A(rows.size(), cols.size());
      for (std::size_t a = 0; a < cols.size(); ++a) {
        for (std::size_t j = 0; j < m; ++j) {
          Exponent b = cols[a];
          ++b[j];
          A(row_idx.at(b), a) += am[a][j] - lambda[j];
        }
      }
      auto ker = nullspace(A);
      if (!ker.empty()) out[static_cast<std::size_t>(d)].push_back({lambda, ker});
    });
  }
  return out;
}

// Coefficient vector of a product of homogeneous polynomials.
ExprVec multiply(const std::vector<Exponent>& ea, const ExprVec& a, const std::vector<Exponent>& eb, const ExprVec& b,
                 const std::map<Exponent, std::size_t>& target) {
  ExprVec out(target.size());
  for (std::size_t i = 0; i < ea.size(); ++i) {
    if (a[i].is_zero()) continue;
    for (std::size_t j = 0; j < eb.size(); ++j) {
      if (b[j].is_zero()) continue;
      Exponent e = ea[i];
      for (std::size_t k = 0; k < e.size(); ++k) e[k] += eb[j][k];
      out[target.at(e)] += a[i] * b[j];
    }
  }
  return out;
}

// Picks vectors of `candidates` that enlarge span(known), in order.
std::vector<ExprVec> new_directions(std::vector<ExprVec> known, const std::vector<ExprVec>& candidates) {
  std::vector<ExprVec> out;
  std::size_t r = rank_of(known);
  for (const auto& v : candidates) {
    known.push_back(v);
    std::size_t nr = rank_of(known);
    if (nr > r) {
      out.push_back(v);
      r = nr;
    } else {
      known.pop_back();
    }
  }
  return out;
}

Expr set_constant_to_one(const LVForm& lv, const Expr& e) {
  if (!lv.constant) return e;
  Rules r;
  r.emplace(dep_atom(lv.y[*lv.constant]), Expr(1));
  return substitute(e, r);
}

}  // namespace

bool verify_semi_invariant(const LVForm& lv, const SemiInvariant& s) {
  Expr lhs = apply_generator(lv.flow(), lv.space(), s.f);
  return is_zero_rational(lhs - lv.linear(s.lambda) * s.f);
}

std::vector<SemiInvariant> darboux(const LVForm& lv, int degree) {
  if (degree < 1) throw Error("degree must be at least 1");
  auto kernels = darboux_kernels(lv, degree);
  std::vector<SemiInvariant> out;
  for (int d = 1; d <= degree; ++d) {
    auto es = exponents(lv.m(), d);
    auto idx = index_of(es);
    for (const auto& k : kernels[static_cast<std::size_t>(d)]) {
      // Products of lower-degree semi-invariants with matching eigenvalues
      // carry no new information.
      std::vector<ExprVec> products;
      for (int d1 = 1; d1 <= d / 2; ++d1) {
        int d2 = d - d1;
        auto e1 = exponents(lv.m(), d1), e2 = exponents(lv.m(), d2);
        for (const auto& k1 : kernels[static_cast<std::size_t>(d1)]) {
          for (const auto& k2 : kernels[static_cast<std::size_t>(d2)]) {
            if (add(k1.lambda, k2.lambda) != k.lambda) continue;
            for (const auto& a : k1.basis) {
              for (const auto& b : k2.basis) products.push_back(multiply(e1, a, e2, b, idx));
            }
          }
        }
      }
      for (const auto& v : new_directions(products, k.basis)) {
        SemiInvariant s;
        s.f = scaled(poly_expr(lv, es, v));
        s.degree = static_cast<std::size_t>(d);
        s.lambda = k.lambda;
        s.f_y = set_constant_to_one(lv, s.f);
        if (s.f_y.is_constant()) continue;
        s.f_x = lv.to_x(s.f_y);
        s.lambda_y = set_constant_to_one(lv, lv.linear(s.lambda));
        if (!verify_semi_invariant(lv, s)) throw Error("internal: semi-invariant failed verification");
        out.push_back(s);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// First integrals

const char* kind_name(IntegralKind k) {
  switch (k) {
    case IntegralKind::Polynomial: return "polynomial";
    case IntegralKind::Product: return "product";
    case IntegralKind::Ratio: return "ratio";
    case IntegralKind::QuasiMonomial: return "quasi-monomial";
    case IntegralKind::Log: return "log";
    case IntegralKind::Decomposition: return "decomposition";
  }
  return "?";
}

Expr FirstIntegral::value() const {
  if (denominator == Expr(1)) return numerator;
  return numerator * pow(denominator, Rational(-1));
}

bool is_first_integral(const QPSystem& sys, const FirstIntegral& I) {
  Expr n = sys.time_derivative(I.numerator);
  if (I.denominator == Expr(1)) return is_zero_rational(n);
  Expr d = sys.time_derivative(I.denominator);
  return is_zero_rational(n * I.denominator - I.numerator * d);
}

namespace {

bool mentions_state(const QPSystem& sys, const Expr& e) {
  if (depends_on_variable(e, sys.time)) return true;
  return std::any_of(sys.vars.begin(), sys.vars.end(), [&](const std::string& v) { return depends_on_variable(e, v); });
}

bool trivial(const QPSystem& sys, const FirstIntegral& I) {
  if (!mentions_state(sys, I.numerator) && !mentions_state(sys, I.denominator)) return true;
  return I.denominator != Expr(1) && rational_ratio(I.numerator, I.denominator).has_value();
}

std::vector<std::size_t> non_constant(const LVForm& lv) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < lv.m(); ++j) {
    if (!lv.constant || j != *lv.constant) out.push_back(j);
  }
  return out;
}

// Rational solutions of sum_j xi_j M_jk = -lambda_k over the non-constant LV
// variables: a particular solution (if any) and null directions.
struct XiSolution {
  std::optional<Vec> particular;
  std::vector<Vec> null;
};

XiSolution solve_xi(const LVForm& lv, const ExprVec& lambda) {
  auto vars = non_constant(lv);
  std::size_t q = vars.size();
  XiSolution out;
  auto embed = [&](const Vec& v) {
    Vec full(lv.m());
    for (std::size_t c = 0; c < q; ++c) full[vars[c]] = v[c];
    return full;
  };
  if (q == 0) {
    out.particular = Vec(lv.m());
    return out;
  }
  // [A | lambda] (xi, 1) = 0
  ExprMatrix A(q, q + 1);
  for (std::size_t r = 0; r < q; ++r) {
    for (std::size_t c = 0; c < q; ++c) A(r, c) = lv.M[vars[c]][vars[r]];
    A(r, q) = lambda[vars[r]];
  }
  for (const auto& v : nullspace(A)) {
    ExprVec head(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(q));
    if (!v[q].is_zero()) {
      if (auto x = rational_ratio(head, v[q])) out.particular = embed(*x);
      continue;
    }
    auto lead = std::find_if(head.begin(), head.end(), [](const Expr& e) { return !e.is_zero(); });
    if (lead == head.end()) continue;
    if (auto x = rational_ratio(head, *lead)) out.null.push_back(embed(*x));
  }
  return out;
}

Expr rho_of(const LVForm& lv, const Vec& xi, const ExprVec& lambda) {
  if (!lv.constant) return Expr();
  std::size_t c = *lv.constant;
  Expr r = lambda[c];
  for (std::size_t j = 0; j < lv.m(); ++j) {
    if (xi[j] != 0) r += Expr(xi[j]) * lv.M[j][c];
  }
  return r;
}

Expr quasi_monomial(const LVForm& lv, const Vec& xi) {
  Expr e(1);
  for (std::size_t j = 0; j < lv.m(); ++j) {
    if (xi[j] != 0 && (!lv.constant || j != *lv.constant)) e *= pow(lv.y_var(j), xi[j]);
  }
  return e;
}

Expr time_weight(const std::string& time, const Expr& rho) {
  if (rho.is_zero()) return Expr(1);
  return exp(-rho * indep(time));
}

class IntegralCollector {
 public:
  explicit IntegralCollector(const QPSystem& sys) : sys_(sys) {}

  void add(IntegralKind kind, const Expr& num, const Expr& den = Expr(1)) {
    FirstIntegral I{kind, scaled(num), den == Expr(1) ? den : scaled(den)};
    if (trivial(sys_, I) || !is_first_integral(sys_, I)) return;
    std::string key = to_string(I.numerator) + "/" + to_string(I.denominator);
    if (!seen_.insert(key).second) return;
    out_.push_back(I);
  }

  std::vector<FirstIntegral> take() { return std::move(out_); }

 private:
  const QPSystem& sys_;
  std::set<std::string> seen_;
  std::vector<FirstIntegral> out_;
};

bool is_const_only(const LVForm& lv, const ExprVec& lambda) {
  for (std::size_t j = 0; j < lv.m(); ++j) {
    if (!lambda[j].is_zero() && (!lv.constant || j != *lv.constant)) return false;
  }
  return true;
}

Expr constant_part(const LVForm& lv, const ExprVec& lambda) { return lv.constant ? lambda[*lv.constant] : Expr(); }

}  // namespace

std::vector<FirstIntegral> qp_first_integrals(const QPSystem& sys, int degree) {
  LVForm lv = to_lv(sys);
  auto semis = darboux(lv, degree);
  IntegralCollector out(sys);
  // Eigenvalue zero, possibly after exp(-lambda0 t) weighting.
  for (const auto& s : semis) {
    if (is_const_only(lv, s.lambda)) {
      out.add(IntegralKind::Polynomial, s.f_x * time_weight(sys.time, constant_part(lv, s.lambda)));
    }
  }
  // Products and ratios with cancelling eigenvalues.
  for (std::size_t a = 0; a < semis.size(); ++a) {
    for (std::size_t b = a + 1; b < semis.size(); ++b) {
      const auto& sa = semis[a];
      const auto& sb = semis[b];
      if (is_const_only(lv, sa.lambda) && is_const_only(lv, sb.lambda)) continue;
      ExprVec sum = add(sa.lambda, sb.lambda), diff = sub(sa.lambda, sb.lambda);
      if (is_const_only(lv, sum)) {
        out.add(IntegralKind::Product, sa.f_x * sb.f_x * time_weight(sys.time, constant_part(lv, sum)));
      }
      if (is_const_only(lv, diff)) {
        out.add(IntegralKind::Ratio, sa.f_x * time_weight(sys.time, constant_part(lv, diff)), sb.f_x);
      }
    }
  }
  // Quasi-monomial prefactors y^xi with xi M = -lambda.
  ExprVec zero(lv.m());
  for (const auto& xi : solve_xi(lv, zero).null) {
    out.add(IntegralKind::QuasiMonomial, lv.to_x(quasi_monomial(lv, xi)) * time_weight(sys.time, rho_of(lv, xi, zero)));
  }
  for (const auto& s : semis) {
    if (is_const_only(lv, s.lambda)) continue;
    auto sol = solve_xi(lv, s.lambda);
    if (!sol.particular) continue;
    const Vec& xi = *sol.particular;
    out.add(IntegralKind::QuasiMonomial,
            lv.to_x(quasi_monomial(lv, xi)) * s.f_x * time_weight(sys.time, rho_of(lv, xi, s.lambda)));
  }
  return out.take();
}

namespace {

// Splits off parameter factors: e = sum_k coeff_k(params) * mono_k.
std::map<Monomial, Expr, MonomialLess> by_state_monomial(const Expr& e) {
  std::map<Monomial, Expr, MonomialLess> out;
  for (const auto& t : e.terms()) {
    Monomial key;
    Expr c(t.coeff);
    for (const auto& f : t.mono) {
      if (f.atom->kind == AtomKind::Param) {
        c *= pow(Expr::from_atom(f.atom), f.exp);
      } else {
        key.push_back(f);
      }
    }
    out[key] += c;
  }
  return out;
}

}  // namespace

std::vector<FirstIntegral> log_integrals(const QPSystem& sys, int degree, bool mixed) {
  std::size_t n = sys.n();
  std::vector<Expr> basis;
  std::vector<Expr> logs;
  for (const auto& v : sys.vars) logs.push_back(ln(dep(v)));
  for (int d = 1; d <= degree; ++d) {
    for (const auto& a : exponents(n, d)) basis.push_back(monomial_in(sys.vars, to_vec(a)));
  }
  for (const auto& l : logs) basis.push_back(l);
  if (mixed) {
    for (std::size_t mask = 1; mask < (std::size_t{1} << n); ++mask) {
      Expr lp(1);
      int count = 0;
      for (std::size_t k = 0; k < n; ++k) {
        if (mask & (std::size_t{1} << k)) {
          lp *= logs[k];
          ++count;
        }
      }
      for (int d = 0; d <= degree; ++d) {
        if (d == 0 && count == 1) continue;
        for (const auto& a : exponents(n, d)) basis.push_back(lp * monomial_in(sys.vars, to_vec(a)));
      }
    }
  }
  std::map<Monomial, std::size_t, MonomialLess> coord;
  std::vector<std::map<Monomial, Expr, MonomialLess>> cols;
  for (const auto& phi : basis) {
    cols.push_back(by_state_monomial(sys.time_derivative(phi)));
    for (const auto& [mono, c] : cols.back()) coord.emplace(mono, coord.size());
  }
  ExprMatrix A(std::max<std::size_t>(coord.size(), 1), basis.size());
  for (std::size_t c = 0; c < cols.size(); ++c) {
    for (const auto& [mono, v] : cols[c]) A(coord.at(mono), c) += v;
  }
  IntegralCollector out(sys);
  for (const auto& v : nullspace(A)) {
    Expr I;
    for (std::size_t i = 0; i < basis.size(); ++i) I += v[i] * basis[i];
    bool has_log = contains_atom(I, [](const Atom& a) { return a->kind == AtomKind::Elem && a->tag == ElemTag::Ln; });
    out.add(has_log ? IntegralKind::Log : IntegralKind::Polynomial, I);
  }
  return out.take();
}

// ---------------------------------------------------------------------------
// Quasi-polynomial symmetries

std::vector<QPSymmetry> qp_symmetries(const QPSystem& sys, int degree) {
  if (degree < 0) throw Error("degree must be non-negative");
  LVForm lv = to_lv(sys);
  std::size_t m = lv.m();
  auto comps = non_constant(lv);
  JetSpace ys = lv.space();
  Generator F = lv.flow();
  JetSpace xs = sys.space();
  Generator Fx = zero_generator(xs);
  Fx.eta = sys.rhs();
  std::vector<std::vector<Kernel>> kernels(static_cast<std::size_t>(degree) + 1);
  std::vector<QPSymmetry> out;
  for (int d = 0; d <= degree; ++d) {
    auto es = exponents(m, d);
    auto targets = exponents(m, d + 1);
    auto tidx = index_of(targets);
    std::size_t nc = es.size();
    // Weight of a term y^alpha d/dy_i is alpha - e_i; the bracket with F
    // raises weights by unit vectors, so at an extreme weight w the
    // eigenvalue is (w M)_j or (w M)_j - M_jj.
    Candidates cands(m);
    for (auto i : comps) {
      for (const auto& a : es) {
        Vec w = to_vec(a);
        w[i] -= 1;
        ExprVec wm = weight_times_M(w, lv);
        for (std::size_t j = 0; j < m; ++j) {
          cands[j].insert(wm[j]);
          cands[j].insert(wm[j] - lv.M[j][j]);
        }
      }
    }
    std::vector<ExprVec> am;
    for (const auto& a : es) am.push_back(weight_times_M(to_vec(a), lv));
    // Unknown (component r, monomial a) sits at column r*nc + a.
    for_each_lambda(cands, [&](const ExprVec& lambda) {
      ExprMatrix A(comps.size() * targets.size(), comps.size() * nc);
      for (std::size_t r = 0; r < comps.size(); ++r) {
        std::size_t i = comps[r];
        for (std::size_t a = 0; a < nc; ++a) {
          std::size_t col = r * nc + a;
          for (std::size_t j = 0; j < m; ++j) {
            Exponent g = es[a];
            ++g[j];
            A(r * targets.size() + tidx.at(g), col) += am[a][j] - lv.M[i][j] - lambda[j];
          }
          // -y_s M_si T_i in component s.
          for (std::size_t q = 0; q < comps.size(); ++q) {
            std::size_t s = comps[q];
            if (lv.M[s][i].is_zero()) continue;
            Exponent g = es[a];
            ++g[s];
            A(q * targets.size() + tidx.at(g), col) -= lv.M[s][i];
          }
        }
      }
      auto ker = nullspace(A);
      if (!ker.empty()) kernels[static_cast<std::size_t>(d)].push_back({lambda, ker});
    });
    for (const auto& k : kernels[static_cast<std::size_t>(d)]) {
      // A field times the constant variable is the same field.
      std::vector<ExprVec> known;
      if (lv.constant && d > 0) {
        auto lower = exponents(m, d - 1);
        auto idx = index_of(es);
        for (const auto& kl : kernels[static_cast<std::size_t>(d - 1)]) {
          if (kl.lambda != k.lambda) continue;
          for (const auto& v : kl.basis) {
            ExprVec lifted(comps.size() * nc);
            for (std::size_t r = 0; r < comps.size(); ++r) {
              for (std::size_t a = 0; a < lower.size(); ++a) {
                Exponent e = lower[a];
                ++e[*lv.constant];
                lifted[r * nc + idx.at(e)] = v[r * lower.size() + a];
              }
            }
            known.push_back(lifted);
          }
        }
      }
      for (const auto& v : new_directions(known, k.basis)) {
        QPSymmetry s;
        s.degree = static_cast<std::size_t>(d);
        s.lambda = k.lambda;
        s.T = zero_generator(ys);
        for (std::size_t r = 0; r < comps.size(); ++r) {
          ExprVec part(v.begin() + static_cast<std::ptrdiff_t>(r * nc),
                       v.begin() + static_cast<std::ptrdiff_t>((r + 1) * nc));
          s.T.eta[comps[r]] = set_constant_to_one(lv, poly_expr(lv, es, part));
        }
        for (const auto& c : s.T.eta) {
          if (c.is_zero()) continue;
          Expr unit(Rational(1) / c.terms()[0].coeff);
          for (auto& e : s.T.eta) e = e * unit;
          break;
        }
        Expr lam = set_constant_to_one(lv, lv.linear(s.lambda));
        Generator br = commutator(F, s.T, ys);
        for (std::size_t i = 0; i < m; ++i) {
          if (!is_zero_rational(set_constant_to_one(lv, br.eta[i]) - lam * s.T.eta[i])) {
            throw Error("internal: semi-invariant field failed verification");
          }
        }
        auto sol = solve_xi(lv, s.lambda);
        if (sol.particular) {
          s.xi = *sol.particular;
          s.rho = rho_of(lv, *s.xi, s.lambda);
          Expr pre = quasi_monomial(lv, *s.xi) * time_weight(lv.time, s.rho);
          Generator G = s.T;
          for (auto& e : G.eta) e = e * pre;
          Generator c = commutator(F, G, ys);
          bool ok = true;
          for (std::size_t i = 0; i < m && ok; ++i) {
            ok = is_zero_rational(set_constant_to_one(lv, c.eta[i] + pdiff_var(G.eta[i], lv.time)));
          }
          if (ok) s.G = G;
          if (ok && lv.back) {
            // x_k = prod_i y_i^back(k,i), so dx_k = x_k sum_i back(k,i) dy_i / y_i.
            Generator Gx = zero_generator(xs);
            for (std::size_t k2 = 0; k2 < sys.n(); ++k2) {
              Expr comp;
              for (std::size_t i = 0; i < m; ++i) {
                Rational b = (*lv.back)(k2, i);
                if (b != 0) comp += Expr(b) * G.eta[i] * pow(lv.y_var(i), Rational(-1));
              }
              Gx.eta[k2] = dep(sys.vars[k2]) * lv.to_x(set_constant_to_one(lv, comp));
            }
            Generator cx = commutator(Fx, Gx, xs);
            bool okx = !Gx.is_zero();
            for (std::size_t k2 = 0; k2 < sys.n() && okx; ++k2) {
              okx = is_zero_rational(cx.eta[k2] + pdiff_var(Gx.eta[k2], sys.time));
            }
            if (okx) s.G_x = Gx;
          }
        }
        out.push_back(s);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Decomposition of a field in terms of others

namespace {

// Exact quotient of polynomials (natural exponents over any atoms), if D | N.
std::optional<Expr> exact_quotient(const Expr& N, const Expr& D) {
  if (D.is_zero()) return std::nullopt;
  std::vector<Atom> atoms;
  auto collect = [&](const Expr& e) {
    for (const auto& t : e.terms()) {
      for (const auto& f : t.mono) {
        if (f.exp < 0 || !is_integer(f.exp)) return false;
        if (std::none_of(atoms.begin(), atoms.end(), [&](const Atom& a) { return atom_equal(a, f.atom); })) {
          atoms.push_back(f.atom);
        }
      }
    }
    return true;
  };
  if (!collect(N) || !collect(D)) return std::nullopt;
  using Poly = std::map<std::vector<long>, Rational, std::greater<>>;  // lex, leading term first
  auto to_poly = [&](const Expr& e) {
    Poly p;
    for (const auto& t : e.terms()) {
      std::vector<long> ex(atoms.size(), 0);
      for (const auto& f : t.mono) {
        auto it = std::find_if(atoms.begin(), atoms.end(), [&](const Atom& a) { return atom_equal(a, f.atom); });
        ex[static_cast<std::size_t>(it - atoms.begin())] = f.exp.get_num().get_si();
      }
      p[ex] += t.coeff;
    }
    return p;
  };
  Poly n = to_poly(N), d = to_poly(D), q;
  const auto& [dlead, dc] = *d.begin();
  for (int guard = 0; !n.empty() && guard < 10000; ++guard) {
    auto [nlead, nc] = *n.begin();
    std::vector<long> shift(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      shift[k] = nlead[k] - dlead[k];
      if (shift[k] < 0) return std::nullopt;
    }
    Rational c = nc / dc;
    q[shift] += c;
    for (const auto& [ex, v] : d) {
      std::vector<long> e2(atoms.size());
      for (std::size_t k = 0; k < atoms.size(); ++k) e2[k] = ex[k] + shift[k];
      auto& slot = n[e2];
      slot -= c * v;
      if (slot == 0) n.erase(e2);
    }
  }
  if (!n.empty()) return std::nullopt;
  Expr out;
  for (const auto& [ex, c] : q) {
    Expr m(c);
    for (std::size_t k = 0; k < atoms.size(); ++k) {
      if (ex[k]) m *= pow(Expr::from_atom(atoms[k]), Rational(ex[k]));
    }
    out += m;
  }
  return out;
}

Expr determinant(const std::vector<std::vector<Expr>>& a) {
  std::size_t n = a.size();
  if (n == 0) return Expr(1);
  if (n == 1) return a[0][0];
  Expr det;
  for (std::size_t c = 0; c < n; ++c) {
    if (a[0][c].is_zero()) continue;
    std::vector<std::vector<Expr>> minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<Expr> row;
      for (std::size_t k = 0; k < n; ++k) {
        if (k != c) row.push_back(a[r][k]);
      }
      minor.push_back(row);
    }
    Expr term = a[0][c] * determinant(minor);
    det = (c % 2 == 0) ? det + term : det - term;
  }
  return det;
}

}  // namespace

std::vector<FirstIntegral> flow_decomposition_integrals(const std::vector<Generator>& gens, const Generator& target,
                                                        const JetSpace& space, const Generator& flow) {
  auto vars = generator_vars(space);
  std::size_t r = gens.size();
  if (r == 0) throw NoDecomposition("no generators to decompose into");
  // Rows: components; columns: generators.
  std::vector<std::vector<Expr>> K;
  std::vector<Expr> b;
  for (const auto& v : vars) {
    std::vector<Expr> row;
    for (const auto& g : gens) row.push_back(component(g, space, v));
    K.push_back(row);
    b.push_back(component(target, space, v));
  }
  std::vector<std::size_t> rows;
  std::optional<std::vector<std::size_t>> chosen;
  std::function<void(std::size_t)> pick = [&](std::size_t start) {
    if (chosen) return;
    if (rows.size() == r) {
      std::vector<std::vector<Expr>> sub;
      for (auto i : rows) sub.push_back(K[i]);
      if (!determinant(sub).is_zero()) chosen = rows;
      return;
    }
    for (std::size_t i = start; i < K.size(); ++i) {
      rows.push_back(i);
      pick(i + 1);
      rows.pop_back();
    }
  };
  pick(0);
  if (!chosen) throw NoDecomposition("generators are pointwise dependent");
  std::vector<std::vector<Expr>> sub;
  for (auto i : *chosen) sub.push_back(K[i]);
  Expr det = determinant(sub);
  std::vector<Expr> nums;
  for (std::size_t k = 0; k < r; ++k) {
    auto s = sub;
    for (std::size_t q = 0; q < chosen->size(); ++q) s[q][k] = b[(*chosen)[q]];
    nums.push_back(determinant(s));
  }
  for (std::size_t i = 0; i < K.size(); ++i) {
    Expr lhs;
    for (std::size_t k = 0; k < r; ++k) lhs += nums[k] * K[i][k];
    if (!clear_denominators(lhs - det * b[i]).is_zero()) {
      throw NoDecomposition("target is not a combination of the generators");
    }
  }
  std::vector<FirstIntegral> out;
  for (std::size_t k = 0; k < r; ++k) {
    Expr N = nums[k], D = det;
    FirstIntegral I{IntegralKind::Decomposition, N, D};
    if (N.is_zero()) {
      I = {IntegralKind::Decomposition, Expr(), Expr(1)};
    } else {
      if (auto quot = exact_quotient(N, D)) {
        I = {IntegralKind::Decomposition, *quot, Expr(1)};
      } else {
        Rational lead = D.terms()[0].coeff;
        I.numerator = N * Expr(Rational(1) / lead);
        I.denominator = D * Expr(Rational(1) / lead);
      }
    }
    Expr dn = apply_generator(flow, space, I.numerator);
    Expr dd = apply_generator(flow, space, I.denominator);
    if (clear_denominators(dn * I.denominator - I.numerator * dd).is_zero()) out.push_back(I);
  }
  return out;
}

}  // namespace symkit
