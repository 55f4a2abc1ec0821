#include "polybound/poly.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "dd.hpp"

namespace polybound {

std::string to_string(VarId v) { return "x" + std::to_string(v.id); }

// ---------------------------------------------------------------------------
// LinearConstraint

LinearConstraint::LinearConstraint(const std::map<VarId, mpq_class>& terms,
                                   Rel rel, const mpq_class& constant)
    : rel_(rel) {
  mpz_class lcm = constant.get_den();
  for (const auto& [v, c] : terms) {
    mpz_lcm(lcm.get_mpz_t(), lcm.get_mpz_t(), c.get_den().get_mpz_t());
  }
  mpq_class scaled_const = constant * lcm;
  constant_ = scaled_const.get_num();
  for (const auto& [v, c] : terms) {
    mpq_class s = c * lcm;
    assert(s.get_den() == 1);
    if (s != 0) terms_.emplace_back(v, s.get_num());
  }
  mpz_class g = constant_ < 0 ? mpz_class(-constant_) : constant_;
  for (const auto& [v, c] : terms_)
    mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.get_mpz_t());
  if (g > 1) {
    constant_ /= g;
    for (auto& [v, c] : terms_) c /= g;
  }
  if (rel_ == Rel::Eq && !terms_.empty() && terms_.front().second < 0) {
    constant_ = -constant_;
    for (auto& [v, c] : terms_) c = -c;
  }
}

LinearConstraint LinearConstraint::eq(VarId x, const mpq_class& c) {
  return LinearConstraint({{x, 1}}, Rel::Eq, c);
}
LinearConstraint LinearConstraint::le(VarId x, const mpq_class& c) {
  return LinearConstraint({{x, 1}}, Rel::Le, c);
}
LinearConstraint LinearConstraint::ge(VarId x, const mpq_class& c) {
  return LinearConstraint({{x, -1}}, Rel::Le, -c);
}
LinearConstraint LinearConstraint::eq_vars(VarId a, VarId b) {
  return rel_vars(a, Rel::Eq, b, 0);
}
LinearConstraint LinearConstraint::rel_vars(VarId a, Rel rel, VarId b,
                                            const mpq_class& c) {
  if (a == b) return LinearConstraint({}, rel, c);
  return LinearConstraint({{a, 1}, {b, -1}}, rel, c);
}

bool LinearConstraint::trivially_true() const {
  if (!terms_.empty()) return false;
  return rel_ == Rel::Eq ? constant_ == 0 : constant_ >= 0;
}

bool LinearConstraint::trivially_false() const {
  if (!terms_.empty()) return false;
  return rel_ == Rel::Eq ? constant_ != 0 : constant_ < 0;
}

bool LinearConstraint::satisfied_by(
    const std::map<VarId, mpq_class>& point) const {
  mpq_class lhs = 0;
  for (const auto& [v, c] : terms_) {
    auto it = point.find(v);
    if (it != point.end()) lhs += mpq_class(c) * it->second;
  }
  return rel_ == Rel::Eq ? lhs == constant_ : lhs <= constant_;
}

bool LinearConstraint::operator==(const LinearConstraint& o) const {
  return rel_ == o.rel_ && constant_ == o.constant_ && terms_ == o.terms_;
}

bool LinearConstraint::operator<(const LinearConstraint& o) const {
  auto cmp_term = [](const std::pair<VarId, mpz_class>& a,
                     const std::pair<VarId, mpz_class>& b) {
    if (a.first != b.first) return a.first < b.first ? -1 : 1;
    return cmp(a.second, b.second) < 0 ? -1 : (a.second == b.second ? 0 : 1);
  };
  size_t n = std::min(terms_.size(), o.terms_.size());
  for (size_t i = 0; i < n; ++i) {
    int c = cmp_term(terms_[i], o.terms_[i]);
    if (c != 0) return c < 0;
  }
  if (terms_.size() != o.terms_.size()) return terms_.size() < o.terms_.size();
  if (rel_ != o.rel_) return rel_ < o.rel_;
  return constant_ < o.constant_;
}

std::string LinearConstraint::to_string() const {
  std::ostringstream os;
  if (terms_.empty()) {
    os << "0";
  } else {
    bool first = true;
    for (const auto& [v, c] : terms_) {
      if (!first) os << " + ";
      os << c.get_str() << "*" << polybound::to_string(v);
      first = false;
    }
  }
  os << (rel_ == Rel::Eq ? " = " : " <= ") << constant_.get_str();
  return os.str();
}

// ---------------------------------------------------------------------------
// Generator

mpq_class Generator::coord(VarId v) const {
  auto it = coords.find(v);
  return it == coords.end() ? mpq_class(0) : it->second;
}

namespace {

bool generator_less(const Generator& a, const Generator& b) {
  if (a.kind != b.kind) return a.kind < b.kind;
  return std::lexicographical_compare(
      a.coords.begin(), a.coords.end(), b.coords.begin(), b.coords.end(),
      [](const auto& x, const auto& y) {
        if (x.first != y.first) return x.first < y.first;
        return x.second < y.second;
      });
}

// Value of the constraint's linear form on a generator (points use the
// affine evaluation against the constant elsewhere; rays and lines use the
// homogeneous form).
mpq_class linear_value(const LinearConstraint& c, const Generator& g) {
  mpq_class acc = 0;
  for (const auto& [v, coef] : c.terms()) acc += mpq_class(coef) * g.coord(v);
  return acc;
}

// Does every point of a polyhedron with this generator satisfy c? The caller
// guarantees c only mentions variables of the polyhedron's dimension set.
bool generator_satisfies(const LinearConstraint& c, const Generator& g) {
  mpq_class val = linear_value(c, g);
  switch (g.kind) {
    case GenKind::Point:
      return c.rel() == Rel::Eq ? val == c.constant() : val <= c.constant();
    case GenKind::Ray:
      return c.rel() == Rel::Eq ? val == 0 : val <= 0;
    case GenKind::Line:
      return val == 0;
  }
  return false;
}

bool generator_saturates(const LinearConstraint& c, const Generator& g) {
  mpq_class val = linear_value(c, g);
  return g.kind == GenKind::Point ? val == c.constant() : val == 0;
}

}  // namespace

// ---------------------------------------------------------------------------
// Canonicalization machinery

class PolyBuilder {
 public:
  // Minimize + canonicalize a raw constraint list.
  static Polyhedron from_constraints(const std::vector<LinearConstraint>& cs);
  // Canonicalize a generator description over an explicit ambient space
  // (a dimension all generators are zero on is constrained to zero, so the
  // space cannot be inferred from the coordinates). Needs at least one point.
  static Polyhedron from_generators(const std::vector<Generator>& gens,
                                    const std::vector<VarId>& ambient);
  // Re-canonicalize an already-minimal system (after renaming).
  static Polyhedron from_minimal(std::vector<LinearConstraint> cons,
                                 std::vector<Generator> gens);

 private:
  struct Rows {
    std::vector<dd::Vec> eqs, ineqs;
  };

  static dd::Vec constraint_row(const LinearConstraint& c,
                                const std::map<VarId, std::size_t>& index,
                                std::size_t width);
  static Rows to_rows(const std::vector<LinearConstraint>& cs,
                      const std::map<VarId, std::size_t>& index,
                      std::size_t width);
  static std::vector<LinearConstraint> rows_to_constraints(
      const dd::Gens& dual, const std::vector<VarId>& dims);
  static std::vector<Generator> rays_to_generators(
      const dd::Gens& gens, const std::vector<VarId>& dims);
  static std::vector<LinearConstraint> canonicalize_system(
      std::vector<LinearConstraint> cs);
  static Polyhedron assemble(const std::vector<LinearConstraint>& minimal);
};

dd::Vec PolyBuilder::constraint_row(const LinearConstraint& c,
                                    const std::map<VarId, std::size_t>& index,
                                    std::size_t width) {
  // a.x <= b  ->  (b, -a).(1, x) >= 0 ; equalities analogous with == 0.
  dd::Vec row(width, 0);
  row[0] = c.constant();
  for (const auto& [v, coef] : c.terms()) row[index.at(v) + 1] = -coef;
  return row;
}

PolyBuilder::Rows PolyBuilder::to_rows(const std::vector<LinearConstraint>& cs,
                                       const std::map<VarId, std::size_t>& index,
                                       std::size_t width) {
  Rows rows;
  for (const auto& c : cs) {
    if (c.trivially_true()) continue;
    dd::Vec row = constraint_row(c, index, width);
    (c.rel() == Rel::Eq ? rows.eqs : rows.ineqs).push_back(std::move(row));
  }
  std::sort(rows.eqs.begin(), rows.eqs.end());
  std::sort(rows.ineqs.begin(), rows.ineqs.end());
  // Positivity of the homogenizing coordinate comes first.
  dd::Vec pos(width, 0);
  pos[0] = 1;
  rows.ineqs.insert(rows.ineqs.begin(), std::move(pos));
  return rows;
}

std::vector<LinearConstraint> PolyBuilder::rows_to_constraints(
    const dd::Gens& dual, const std::vector<VarId>& dims) {
  std::vector<LinearConstraint> out;
  auto emit = [&](const dd::Vec& row, Rel rel) {
    // row.(1, x) >= 0 (or == 0)  ->  sum(-row_i * x_i) REL row_0
    std::map<VarId, mpq_class> terms;
    bool nonzero = false;
    for (std::size_t i = 0; i < dims.size(); ++i) {
      if (row[i + 1] != 0) {
        terms[dims[i]] = mpq_class(-row[i + 1]);
        nonzero = true;
      }
    }
    if (!nonzero) return;  // positivity facet or zero row
    out.emplace_back(terms, rel, mpq_class(row[0]));
  };
  for (const auto& l : dual.lines) emit(l, Rel::Eq);
  for (const auto& r : dual.rays) emit(r, Rel::Le);
  return out;
}

std::vector<Generator> PolyBuilder::rays_to_generators(
    const dd::Gens& gens, const std::vector<VarId>& dims) {
  std::vector<Generator> out;
  for (const auto& l : gens.lines) {
    assert(l[0] == 0);
    Generator g;
    g.kind = GenKind::Line;
    // Canonical sign: first nonzero coordinate positive.
    int sign = 0;
    for (std::size_t i = 1; i < l.size() && sign == 0; ++i)
      sign = mpz_sgn(l[i].get_mpz_t());
    for (std::size_t i = 1; i < l.size(); ++i) {
      if (l[i] != 0) g.coords[dims[i - 1]] = mpq_class(sign < 0 ? -l[i] : l[i]);
    }
    out.push_back(std::move(g));
  }
  for (const auto& r : gens.rays) {
    Generator g;
    if (r[0] > 0) {
      g.kind = GenKind::Point;
      for (std::size_t i = 1; i < r.size(); ++i) {
        if (r[i] != 0) {
          mpq_class q(r[i], r[0]);
          q.canonicalize();
          g.coords[dims[i - 1]] = q;
        }
      }
    } else {
      assert(r[0] == 0);
      g.kind = GenKind::Ray;
      for (std::size_t i = 1; i < r.size(); ++i)
        if (r[i] != 0) g.coords[dims[i - 1]] = mpq_class(r[i]);
    }
    out.push_back(std::move(g));
  }
  std::sort(out.begin(), out.end(), generator_less);
  return out;
}

// Gauss-reduce the equalities to reduced row echelon form and eliminate their
// pivot variables from the inequalities, so equal polyhedra print identically.
std::vector<LinearConstraint> PolyBuilder::canonicalize_system(
    std::vector<LinearConstraint> cs) {
  std::set<VarId> var_set;
  for (const auto& c : cs)
    for (const auto& [v, coef] : c.terms()) var_set.insert(v);
  std::vector<VarId> vars(var_set.begin(), var_set.end());
  std::map<VarId, std::size_t> index;
  for (std::size_t i = 0; i < vars.size(); ++i) index[vars[i]] = i;
  std::size_t n = vars.size();

  using QRow = std::vector<mpq_class>;  // n coefficients + constant
  auto to_qrow = [&](const LinearConstraint& c) {
    QRow r(n + 1, 0);
    for (const auto& [v, coef] : c.terms()) r[index[v]] = mpq_class(coef);
    r[n] = mpq_class(c.constant());
    return r;
  };

  std::vector<QRow> eqs, ineqs;
  for (const auto& c : cs)
    (c.rel() == Rel::Eq ? eqs : ineqs).push_back(to_qrow(c));

  // RREF on equalities.
  std::vector<std::size_t> pivots;
  std::size_t rank = 0;
  for (std::size_t col = 0; col < n && rank < eqs.size(); ++col) {
    std::size_t sel = eqs.size();
    for (std::size_t r = rank; r < eqs.size(); ++r)
      if (eqs[r][col] != 0) {
        sel = r;
        break;
      }
    if (sel == eqs.size()) continue;
    std::swap(eqs[rank], eqs[sel]);
    mpq_class lead = eqs[rank][col];
    for (auto& x : eqs[rank]) x /= lead;
    for (std::size_t r = 0; r < eqs.size(); ++r) {
      if (r == rank || eqs[r][col] == 0) continue;
      mpq_class f = eqs[r][col];
      for (std::size_t k = 0; k <= n; ++k) eqs[r][k] -= f * eqs[rank][k];
    }
    pivots.push_back(col);
    ++rank;
  }
  eqs.resize(rank);

  for (auto& iq : ineqs) {
    for (std::size_t r = 0; r < rank; ++r) {
      mpq_class f = iq[pivots[r]];
      if (f == 0) continue;
      for (std::size_t k = 0; k <= n; ++k) iq[k] -= f * eqs[r][k];
    }
  }

  auto from_qrow = [&](const QRow& r, Rel rel) -> std::optional<LinearConstraint> {
    std::map<VarId, mpq_class> terms;
    for (std::size_t i = 0; i < n; ++i)
      if (r[i] != 0) terms[vars[i]] = r[i];
    LinearConstraint c(terms, rel, r[n]);
    if (c.trivially_true()) return std::nullopt;
    assert(!c.trivially_false());
    return c;
  };

  std::vector<LinearConstraint> out;
  for (const auto& r : eqs)
    if (auto c = from_qrow(r, Rel::Eq)) out.push_back(std::move(*c));
  for (const auto& r : ineqs)
    if (auto c = from_qrow(r, Rel::Le)) out.push_back(std::move(*c));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Polyhedron PolyBuilder::assemble(const std::vector<LinearConstraint>& minimal) {
  std::vector<LinearConstraint> canon = canonicalize_system(minimal);
  std::set<VarId> var_set;
  for (const auto& c : canon)
    for (const auto& [v, coef] : c.terms()) var_set.insert(v);
  std::vector<VarId> dims(var_set.begin(), var_set.end());
  std::map<VarId, std::size_t> index;
  for (std::size_t i = 0; i < dims.size(); ++i) index[dims[i]] = i;

  Rows rows = to_rows(canon, index, dims.size() + 1);
  dd::Gens gens = dd::convert(rows.eqs, rows.ineqs, dims.size() + 1);
  Polyhedron p;
  p.rebuild_from_canonical(std::move(canon), rays_to_generators(gens, dims));
  return p;
}

Polyhedron PolyBuilder::from_constraints(
    const std::vector<LinearConstraint>& cs) {
  for (const auto& c : cs)
    if (c.trivially_false()) return Polyhedron::bottom();

  // Degenerate systems can defeat the double description method. Dropping
  // inequality rows is a sound over-approximation, so retry with the widest
  // rows removed: first everything beyond two terms (and beyond eight
  // inequality-constrained dimensions), then beyond one, then inequalities
  // altogether (equality-only systems are always cheap).
  std::vector<LinearConstraint> work(cs);
  for (std::size_t max_terms : {SIZE_MAX, std::size_t{2}, std::size_t{1},
                                std::size_t{0}}) {
    if (max_terms != SIZE_MAX) {
      std::set<VarId> allowed;
      for (const auto& c : work) {
        if (c.rel() == Rel::Eq) continue;
        for (const auto& [v, coef] : c.terms()) {
          if (allowed.size() < 8) allowed.insert(v);
        }
      }
      std::vector<LinearConstraint> reduced;
      for (const auto& c : work) {
        if (c.rel() == Rel::Eq) {
          reduced.push_back(c);
          continue;
        }
        if (c.terms().size() > max_terms) continue;
        bool ok = true;
        for (const auto& [v, coef] : c.terms()) ok &= allowed.count(v) > 0;
        if (ok) reduced.push_back(c);
      }
      work = std::move(reduced);
    }
    std::set<VarId> var_set;
    for (const auto& c : work)
      for (const auto& [v, coef] : c.terms()) var_set.insert(v);
    std::vector<VarId> dims(var_set.begin(), var_set.end());
    std::map<VarId, std::size_t> index;
    for (std::size_t i = 0; i < dims.size(); ++i) index[dims[i]] = i;
    std::size_t width = dims.size() + 1;

    try {
      Rows rows = to_rows(work, index, width);
      dd::Gens gens = dd::convert(rows.eqs, rows.ineqs, width);
      bool has_point = false;
      for (const auto& r : gens.rays) has_point |= r[0] > 0;
      if (!has_point) return Polyhedron::bottom();

      // Dual conversion: generators of the cone describe its facets.
      dd::Gens dual = dd::convert(gens.lines, gens.rays, width);
      return assemble(rows_to_constraints(dual, dims));
    } catch (const dd::ConversionLimitExceeded&) {
      continue;
    }
  }
  return Polyhedron::top();  // unreachable: the equality-only pass is cheap
}

Polyhedron PolyBuilder::from_generators(const std::vector<Generator>& in,
                                        const std::vector<VarId>& ambient) {
  bool has_point = false;
  for (const auto& g : in) has_point |= g.kind == GenKind::Point;
  assert(has_point);
  const std::vector<VarId>& dims = ambient;
  std::map<VarId, std::size_t> index;
  for (std::size_t i = 0; i < dims.size(); ++i) index[dims[i]] = i;
  std::size_t width = dims.size() + 1;

  std::vector<dd::Vec> eq_rows, ineq_rows;
  for (const auto& g : in) {
    dd::Vec v(width, 0);
    if (g.kind == GenKind::Point) {
      mpz_class den = 1;
      for (const auto& [var, q] : g.coords)
        mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), q.get_den().get_mpz_t());
      v[0] = den;
      for (const auto& [var, q] : g.coords) {
        mpq_class s = q * den;
        v[index[var] + 1] = s.get_num();
      }
    } else {
      for (const auto& [var, q] : g.coords) {
        assert(q.get_den() == 1);
        v[index[var] + 1] = q.get_num();
      }
    }
    dd::normalize(v);
    (g.kind == GenKind::Line ? eq_rows : ineq_rows).push_back(std::move(v));
  }
  std::sort(eq_rows.begin(), eq_rows.end());
  std::sort(ineq_rows.begin(), ineq_rows.end());

  try {
    dd::Gens dual = dd::convert(eq_rows, ineq_rows, width);
    return assemble(rows_to_constraints(dual, dims));
  } catch (const dd::ConversionLimitExceeded&) {
    // Too many facets: over-approximate by the bounding box of the
    // generators, keeping at most eight constrained dimensions (lowest
    // variable ids first, which favors long-lived analysis variables).
    std::vector<LinearConstraint> box;
    std::size_t constrained = 0;
    for (VarId v : dims) {
      if (constrained >= 8) break;
      bool lo_ok = true, hi_ok = true;
      std::optional<mpq_class> lo, hi;
      for (const auto& g : in) {
        mpq_class c = g.coord(v);
        if (g.kind == GenKind::Point) {
          if (!lo || c < *lo) lo = c;
          if (!hi || c > *hi) hi = c;
        } else if (g.kind == GenKind::Ray) {
          if (c > 0) hi_ok = false;
          if (c < 0) lo_ok = false;
        } else if (c != 0) {
          lo_ok = hi_ok = false;
        }
      }
      bool used = false;
      if (lo_ok && lo) {
        box.push_back(LinearConstraint::ge(v, *lo));
        used = true;
      }
      if (hi_ok && hi) {
        box.push_back(LinearConstraint::le(v, *hi));
        used = true;
      }
      if (used) ++constrained;
    }
    return from_constraints(box);
  }
}

Polyhedron PolyBuilder::from_minimal(std::vector<LinearConstraint> cons,
                                     std::vector<Generator> gens) {
  Polyhedron p;
  std::sort(gens.begin(), gens.end(), generator_less);
  p.rebuild_from_canonical(canonicalize_system(std::move(cons)),
                           std::move(gens));
  return p;
}

// ---------------------------------------------------------------------------
// Polyhedron

Polyhedron Polyhedron::bottom() {
  Polyhedron p;
  p.empty_ = true;
  return p;
}

Polyhedron Polyhedron::of(const std::vector<LinearConstraint>& cs) {
  return PolyBuilder::from_constraints(cs);
}

void Polyhedron::rebuild_from_canonical(std::vector<LinearConstraint> cons,
                                        std::vector<Generator> gens) {
  empty_ = false;
  cons_ = std::move(cons);
  gens_ = std::move(gens);
  std::set<VarId> var_set;
  for (const auto& c : cons_)
    for (const auto& [v, coef] : c.terms()) var_set.insert(v);
  dims_.assign(var_set.begin(), var_set.end());
}

bool Polyhedron::mentions(VarId v) const {
  return std::binary_search(dims_.begin(), dims_.end(), v);
}

bool Polyhedron::entails(const LinearConstraint& c) const {
  if (empty_) return true;
  if (c.trivially_true()) return true;
  if (c.trivially_false()) return false;
  for (const auto& [v, coef] : c.terms())
    if (!mentions(v)) return false;  // free variable: unbounded either way
  for (const auto& g : gens_)
    if (!generator_satisfies(c, g)) return false;
  return true;
}

Extremum Polyhedron::maximize_expr(const std::map<VarId, mpq_class>& lin) const {
  if (empty_) return Extremum::empty();
  bool have = false;
  mpq_class best = 0;
  for (const auto& [v, coef] : lin)
    if (coef != 0 && !mentions(v)) return Extremum::unbounded();
  auto value = [&](const Generator& g) {
    mpq_class acc = 0;
    for (const auto& [v, coef] : lin) acc += coef * g.coord(v);
    return acc;
  };
  for (const auto& g : gens_) {
    mpq_class val = value(g);
    switch (g.kind) {
      case GenKind::Point:
        if (!have || val > best) best = val;
        have = true;
        break;
      case GenKind::Ray:
        if (val > 0) return Extremum::unbounded();
        break;
      case GenKind::Line:
        if (val != 0) return Extremum::unbounded();
        break;
    }
  }
  assert(have);
  return Extremum::finite(best);
}

Extremum Polyhedron::maximize(VarId x) const {
  return maximize_expr({{x, 1}});
}

Extremum Polyhedron::minimize(VarId x) const {
  Extremum e = maximize_expr({{x, -1}});
  if (e.kind == Extremum::Kind::Finite) e.value = -e.value;
  return e;
}

std::string Polyhedron::to_debug_string() const {
  if (empty_) return "false";
  std::ostringstream os;
  bool first = true;
  for (const auto& c : cons_) {
    if (!first) os << "\n";
    os << c.to_string();
    first = false;
  }
  return os.str();
}

bool Polyhedron::operator==(const Polyhedron& o) const {
  return empty_ == o.empty_ && cons_ == o.cons_;
}

// ---------------------------------------------------------------------------
// Operations

bool includes(const Polyhedron& p, const Polyhedron& q) {
  if (q.is_empty()) return true;
  if (p.is_empty()) return false;
  for (const auto& c : p.constraints())
    if (!q.entails(c)) return false;
  return true;
}

Polyhedron intersect(const Polyhedron& p, const Polyhedron& q) {
  if (p.is_empty() || q.is_empty()) return Polyhedron::bottom();
  std::vector<LinearConstraint> cs = p.constraints();
  cs.insert(cs.end(), q.constraints().begin(), q.constraints().end());
  return Polyhedron::of(cs);
}

namespace {

// Generators plus one explicit line per variable of `ambient` the polyhedron
// does not mention (its implicit free dimensions).
void append_generators(const Polyhedron& p, const std::vector<VarId>& ambient,
                       std::vector<Generator>& out) {
  for (const auto& g : p.generators()) out.push_back(g);
  for (VarId v : ambient) {
    if (!p.mentions(v)) {
      Generator line;
      line.kind = GenKind::Line;
      line.coords[v] = 1;
      out.push_back(std::move(line));
    }
  }
}

}  // namespace

Polyhedron hull(const Polyhedron& p, const Polyhedron& q) {
  if (p.is_empty()) return q;
  if (q.is_empty()) return p;
  std::set<VarId> ambient_set(p.vars().begin(), p.vars().end());
  ambient_set.insert(q.vars().begin(), q.vars().end());
  std::vector<VarId> ambient(ambient_set.begin(), ambient_set.end());
  std::vector<Generator> gens;
  append_generators(p, ambient, gens);
  append_generators(q, ambient, gens);
  return PolyBuilder::from_generators(gens, ambient);
}

Polyhedron project(const Polyhedron& p, const std::set<VarId>& keep) {
  if (p.is_empty()) return Polyhedron::bottom();
  std::vector<VarId> ambient;
  for (VarId v : p.vars())
    if (keep.count(v)) ambient.push_back(v);
  std::vector<Generator> gens;
  for (const auto& g : p.generators()) {
    Generator ng;
    ng.kind = g.kind;
    for (const auto& [v, q] : g.coords)
      if (keep.count(v)) ng.coords[v] = q;
    if (ng.kind != GenKind::Point && ng.coords.empty()) continue;
    gens.push_back(std::move(ng));
  }
  return PolyBuilder::from_generators(gens, ambient);
}

Polyhedron project_out(const Polyhedron& p, const std::set<VarId>& drop) {
  std::set<VarId> keep;
  for (VarId v : p.vars())
    if (!drop.count(v)) keep.insert(v);
  return project(p, keep);
}

Polyhedron rename_vars(const Polyhedron& p,
                       const std::map<VarId, VarId>& subst) {
  if (p.is_empty()) return p;
  std::map<VarId, VarId> effective;
  for (const auto& [from, to] : subst) {
    if (from != to && p.mentions(from)) effective[from] = to;
  }
  if (effective.empty()) return p;
  std::set<VarId> targets;
  for (const auto& [from, to] : effective) {
    if (!targets.insert(to).second)
      throw std::invalid_argument("rename: duplicate target " + to_string(to));
  }
  for (VarId v : p.vars()) {
    if (targets.count(v) && !effective.count(v))
      throw std::invalid_argument("rename: target " + to_string(v) +
                                  " already occurs");
  }
  auto map_var = [&](VarId v) {
    auto it = effective.find(v);
    return it == effective.end() ? v : it->second;
  };
  std::vector<LinearConstraint> cons;
  for (const auto& c : p.constraints()) {
    std::map<VarId, mpq_class> terms;
    for (const auto& [v, coef] : c.terms()) terms[map_var(v)] = mpq_class(coef);
    cons.emplace_back(terms, c.rel(), mpq_class(c.constant()));
  }
  std::vector<Generator> gens;
  for (const auto& g : p.generators()) {
    Generator ng;
    ng.kind = g.kind;
    for (const auto& [v, q] : g.coords) ng.coords[map_var(v)] = q;
    gens.push_back(std::move(ng));
  }
  return PolyBuilder::from_minimal(std::move(cons), std::move(gens));
}

namespace {

// Equalities split into their two inequality directions, so the widening
// filter can retain one side of a relation the new state no longer pins.
std::vector<LinearConstraint> split_equalities(
    const std::vector<LinearConstraint>& cs) {
  std::vector<LinearConstraint> out;
  for (const auto& c : cs) {
    if (c.rel() == Rel::Le) {
      out.push_back(c);
      continue;
    }
    std::map<VarId, mpq_class> terms, neg;
    for (const auto& [v, coef] : c.terms()) {
      terms[v] = mpq_class(coef);
      neg[v] = mpq_class(-coef);
    }
    out.emplace_back(terms, Rel::Le, mpq_class(c.constant()));
    out.emplace_back(neg, Rel::Le, mpq_class(-c.constant()));
  }
  return out;
}

std::vector<bool> saturation_mask(const LinearConstraint& c,
                                  const std::vector<Generator>& gens) {
  std::vector<bool> mask(gens.size());
  for (std::size_t i = 0; i < gens.size(); ++i)
    mask[i] = generator_saturates(c, gens[i]);
  return mask;
}

}  // namespace

Polyhedron widen(const Polyhedron& p, const Polyhedron& q_in,
                 WideningVariant variant) {
  if (p.is_empty()) return q_in;
  if (q_in.is_empty()) return p;
  Polyhedron q = includes(q_in, p) ? q_in : hull(p, q_in);

  std::vector<LinearConstraint> p_sys = split_equalities(p.constraints());
  std::vector<LinearConstraint> result;
  for (const auto& c : p_sys)
    if (q.entails(c)) result.push_back(c);

  if (variant == WideningVariant::BoundRetaining) {
    // Bounds of p are entailed by p but often subsumed away by sharper
    // facets in the minimized system; the plain filter then loses them for
    // good even when they are stable across the whole chain.
    for (VarId v : p.vars()) {
      Extremum hi = p.maximize(v);
      if (hi.is_finite()) {
        LinearConstraint c = LinearConstraint::le(v, hi.value);
        if (q.entails(c)) result.push_back(c);
      }
      Extremum lo = p.minimize(v);
      if (lo.is_finite()) {
        LinearConstraint c = LinearConstraint::ge(v, lo.value);
        if (q.entails(c)) result.push_back(c);
      }
    }
  }

  // Constraints of q that touch p exactly where some constraint of p does
  // are exchange-equivalent to it and may be kept without hurting
  // termination.
  std::vector<std::vector<bool>> p_masks;
  p_masks.reserve(p_sys.size());
  for (const auto& c : p_sys) p_masks.push_back(saturation_mask(c, p.generators()));

  for (const auto& c : split_equalities(q.constraints())) {
    if (!p.entails(c)) continue;
    std::vector<bool> mask = saturation_mask(c, p.generators());
    for (const auto& pm : p_masks) {
      if (pm == mask) {
        result.push_back(c);
        break;
      }
    }
  }
  return Polyhedron::of(result);
}

}  // namespace polybound
