#include "symkit/liealg.hpp"

#include <map>
#include <sstream>

namespace symkit {

Expr apply_generator(const Generator& g, const JetSpace& space, const Expr& f) {
  Expr out;
  for (const auto& v : generator_vars(space)) {
    const Expr& c = component(g, space, v);
    if (!c.is_zero()) out += c * pdiff_var(f, v);
  }
  return out;
}

Generator commutator(const Generator& a, const Generator& b, const JetSpace& space) {
  Generator out = zero_generator(space);
  for (const auto& v : generator_vars(space)) {
    component(out, space, v) =
        apply_generator(a, space, component(b, space, v)) - apply_generator(b, space, component(a, space, v));
  }
  return out;
}

namespace {

// Coordinates of generators over a shared (component, monomial) index.
class Coordinates {
 public:
  Vec of(const Generator& g) {
    std::vector<std::pair<std::size_t, Rational>> entries;
    std::size_t comp = 0;
    auto add = [&](const Expr& c) {
      for (const auto& t : c.terms()) entries.push_back({index(comp, t.mono), t.coeff});
      ++comp;
    };
    for (const auto& c : g.theta) add(c);
    for (const auto& c : g.eta) add(c);
    Vec v(keys_.size());
    for (const auto& [k, c] : entries) v[k] = c;
    return v;
  }
  std::size_t size() const { return keys_.size(); }

 private:
  struct KeyLess {
    bool operator()(const std::pair<std::size_t, Monomial>& a, const std::pair<std::size_t, Monomial>& b) const {
      if (a.first != b.first) return a.first < b.first;
      return compare(a.second, b.second) < 0;
    }
  };
  std::size_t index(std::size_t comp, const Monomial& m) {
    auto it = keys_.find({comp, m});
    if (it != keys_.end()) return it->second;
    std::size_t k = keys_.size();
    keys_.emplace(std::make_pair(comp, m), k);
    return k;
  }
  std::map<std::pair<std::size_t, Monomial>, std::size_t, KeyLess> keys_;
};

Matrix columns(std::vector<Vec> cols, std::size_t rows) {
  Matrix m(rows, cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j) {
    cols[j].resize(rows);
    for (std::size_t i = 0; i < rows; ++i) m(i, j) = cols[j][i];
  }
  return m;
}

}  // namespace

std::optional<Vec> decompose(const Generator& g, const std::vector<Generator>& basis) {
  Coordinates coords;
  std::vector<Vec> cols;
  for (const auto& b : basis) cols.push_back(coords.of(b));
  Vec target = coords.of(g);
  std::size_t n = coords.size();
  target.resize(n);
  if (basis.empty()) {
    for (const auto& x : target) {
      if (x != 0) return std::nullopt;
    }
    return Vec{};
  }
  return solve(columns(cols, n), target);
}

std::vector<Generator> independent_subset(const std::vector<Generator>& gens) {
  std::vector<Generator> kept;
  for (const auto& g : gens) {
    if (g.is_zero()) continue;
    if (!decompose(g, kept)) kept.push_back(g);
  }
  return kept;
}

bool linearly_independent(const std::vector<Generator>& gens) { return independent_subset(gens).size() == gens.size(); }

CommutationTable commutation_table(const AlgebraBasis& basis) {
  CommutationTable t;
  std::size_t m = basis.dim();
  t.entries.assign(m, std::vector<TableEntry>(m));
  for (std::size_t a = 0; a < m; ++a) {
    t.entries[a][a] = {zero_generator(basis.space), Vec(m)};
    for (std::size_t b = a + 1; b < m; ++b) {
      Generator c = commutator(basis.gens[a], basis.gens[b], basis.space);
      auto coords = decompose(c, basis.gens);
      if (!coords) t.closed = false;
      t.entries[a][b] = {c, coords};
      Generator neg = c;
      for (auto& e : neg.theta) e = -e;
      for (auto& e : neg.eta) e = -e;
      std::optional<Vec> ncoords;
      if (coords) {
        ncoords = *coords;
        for (auto& x : *ncoords) x = -x;
      }
      t.entries[b][a] = {neg, ncoords};
    }
  }
  return t;
}

std::string entry_string(const TableEntry& e, const JetSpace& space) {
  if (!e.coords) return to_string(e.value, space);
  std::ostringstream os;
  bool first = true;
  for (std::size_t k = 0; k < e.coords->size(); ++k) {
    const Rational& c = (*e.coords)[k];
    if (c == 0) continue;
    Rational mag = abs(c);
    os << (first ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + "));
    if (mag != 1) os << mag.get_str() << "*";
    os << "G" << (k + 1);
    first = false;
  }
  if (first) os << "0";
  return os.str();
}

std::string to_string(const CommutationTable& t, const JetSpace& space) {
  std::vector<std::vector<std::string>> cells(t.dim(), std::vector<std::string>(t.dim()));
  std::size_t width = 1;
  for (std::size_t a = 0; a < t.dim(); ++a) {
    for (std::size_t b = 0; b < t.dim(); ++b) {
      cells[a][b] = entry_string(t.entries[a][b], space);
      width = std::max(width, cells[a][b].size());
    }
  }
  std::ostringstream os;
  for (const auto& row : cells) {
    for (std::size_t b = 0; b < row.size(); ++b) {
      os << (b ? "  " : "") << row[b] << std::string(width - row[b].size(), ' ');
    }
    os << "\n";
  }
  return os.str();
}

bool StructureConstants::antisymmetric() const {
  for (std::size_t a = 0; a < dim_; ++a) {
    for (std::size_t b = 0; b < dim_; ++b) {
      for (std::size_t k = 0; k < dim_; ++k) {
        if ((*this)(a, b, k) != -(*this)(b, a, k)) return false;
      }
    }
  }
  return true;
}

bool StructureConstants::satisfies_jacobi() const {
  const auto& c = *this;
  for (std::size_t a = 0; a < dim_; ++a) {
    for (std::size_t b = 0; b < dim_; ++b) {
      for (std::size_t d = 0; d < dim_; ++d) {
        for (std::size_t k = 0; k < dim_; ++k) {
          Rational s = 0;
          for (std::size_t m = 0; m < dim_; ++m) {
            s += c(a, b, m) * c(m, d, k) + c(b, d, m) * c(m, a, k) + c(d, a, m) * c(m, b, k);
          }
          if (s != 0) return false;
        }
      }
    }
  }
  return true;
}

StructureConstants structure_constants(const AlgebraBasis& basis) {
  auto table = commutation_table(basis);
  StructureConstants sc(basis.dim());
  for (std::size_t a = 0; a < basis.dim(); ++a) {
    for (std::size_t b = 0; b < basis.dim(); ++b) {
      const auto& e = table.entries[a][b];
      if (!e.coords) {
        throw NotClosed("[G" + std::to_string(a + 1) + ", G" + std::to_string(b + 1) +
                        "] = " + to_string(e.value, basis.space) + " is not in the span of the basis");
      }
      for (std::size_t k = 0; k < basis.dim(); ++k) sc(a, b, k) = (*e.coords)[k];
    }
  }
  return sc;
}

AlgebraBasis derived_subalgebra(const AlgebraBasis& basis) {
  structure_constants(basis);  // closure check
  std::vector<Generator> comms;
  for (std::size_t a = 0; a < basis.dim(); ++a) {
    for (std::size_t b = a + 1; b < basis.dim(); ++b) comms.push_back(commutator(basis.gens[a], basis.gens[b], basis.space));
  }
  return {basis.space, independent_subset(comms)};
}

bool is_solvable(const AlgebraBasis& basis) {
  AlgebraBasis cur{basis.space, independent_subset(basis.gens)};
  for (std::size_t step = 0; step <= basis.dim() + 1; ++step) {
    if (cur.dim() == 0) return true;
    AlgebraBasis next = derived_subalgebra(cur);
    if (next.dim() == cur.dim()) return false;
    cur = std::move(next);
  }
  return cur.dim() == 0;
}

}  // namespace symkit
