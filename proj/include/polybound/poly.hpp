#pragma once

#include <gmpxx.h>

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace polybound {

// One dimension of the analysis-wide variable space. Ids come from
// FreshVarGen and are never reused within a run.
struct VarId {
  uint32_t id = 0;
  auto operator<=>(const VarId&) const = default;
};

std::string to_string(VarId v);  // "x<id>"

// Hands out globally fresh variable ids. One instance per analysis run.
class FreshVarGen {
 public:
  VarId fresh() { return VarId{next_++}; }
  uint32_t next_id() const { return next_; }

 private:
  uint32_t next_ = 1;
};

enum class Rel { Eq, Le };

// sum(coeff_i * x_i) REL constant. Stored with integer coefficients,
// content gcd 1 (taken over coefficients and the constant together);
// equalities are sign-normalized so the lowest-variable coefficient is
// positive. Rational inputs are scaled on construction.
class LinearConstraint {
 public:
  LinearConstraint(const std::map<VarId, mpq_class>& terms, Rel rel,
                   const mpq_class& constant);

  // Builders for the common shapes.
  static LinearConstraint eq(VarId x, const mpq_class& c);        // x = c
  static LinearConstraint le(VarId x, const mpq_class& c);        // x <= c
  static LinearConstraint ge(VarId x, const mpq_class& c);        // x >= c
  static LinearConstraint eq_vars(VarId a, VarId b);              // a = b
  // a REL b + c
  static LinearConstraint rel_vars(VarId a, Rel rel, VarId b, const mpq_class& c);

  const std::vector<std::pair<VarId, mpz_class>>& terms() const { return terms_; }
  Rel rel() const { return rel_; }
  const mpz_class& constant() const { return constant_; }

  bool trivially_true() const;   // no terms, constant satisfies rel
  bool trivially_false() const;  // no terms, constant violates rel

  // Missing variables are treated as zero.
  bool satisfied_by(const std::map<VarId, mpq_class>& point) const;

  std::string to_string() const;  // "1*x1 + -1*x2 <= 0"

  bool operator==(const LinearConstraint& o) const;
  bool operator<(const LinearConstraint& o) const;  // stable canonical order

 private:
  std::vector<std::pair<VarId, mpz_class>> terms_;  // sorted by VarId, no zeros
  Rel rel_ = Rel::Le;
  mpz_class constant_ = 0;
};

enum class GenKind { Point, Ray, Line };

// Vertex / extreme ray / line of a polyhedron. Point coordinates are
// rationals; ray and line directions are integral with content gcd 1.
// Zero coordinates are omitted from the map.
struct Generator {
  GenKind kind = GenKind::Point;
  std::map<VarId, mpq_class> coords;

  mpq_class coord(VarId v) const;
};

struct Extremum {
  enum class Kind { Empty, Finite, Unbounded };
  Kind kind = Kind::Empty;
  mpq_class value;  // meaningful iff kind == Finite

  static Extremum empty() { return {Kind::Empty, 0}; }
  static Extremum unbounded() { return {Kind::Unbounded, 0}; }
  static Extremum finite(const mpq_class& v) { return {Kind::Finite, v}; }
  bool is_finite() const { return kind == Kind::Finite; }
  bool operator==(const Extremum& o) const {
    return kind == o.kind && (kind != Kind::Finite || value == o.value);
  }
};

// Closed convex polyhedron over the rationals, kept in a canonical minimized
// dual representation (constraints plus generators). Variables not mentioned
// by any constraint are unconstrained; the dimension set equals the set of
// mentioned variables. Immutable after construction; all operations return
// new values.
class Polyhedron {
 public:
  Polyhedron() = default;  // top

  static Polyhedron top() { return Polyhedron(); }
  static Polyhedron bottom();
  static Polyhedron of(const std::vector<LinearConstraint>& cs);

  bool is_empty() const { return empty_; }
  bool is_universe() const { return !empty_ && cons_.empty(); }

  // Minimized canonical constraint system (empty for top and bottom).
  const std::vector<LinearConstraint>& constraints() const { return cons_; }
  // Minimized generator system (empty for bottom).
  const std::vector<Generator>& generators() const { return gens_; }
  // Variables appearing in the constraints, ascending.
  const std::vector<VarId>& vars() const { return dims_; }
  bool mentions(VarId v) const;

  Extremum maximize(VarId x) const;
  Extremum minimize(VarId x) const;
  // max of sum(coeff_i * x_i) over the polyhedron.
  Extremum maximize_expr(const std::map<VarId, mpq_class>& lin) const;

  // True iff every point satisfies the constraint.
  bool entails(const LinearConstraint& c) const;

  // One constraint per line, canonical order; "false" for bottom.
  std::string to_debug_string() const;

  // Canonical forms are unique, so equality is geometric equality.
  bool operator==(const Polyhedron& o) const;

 private:
  bool empty_ = false;
  std::vector<VarId> dims_;
  std::vector<LinearConstraint> cons_;
  std::vector<Generator> gens_;

  void rebuild_from_canonical(std::vector<LinearConstraint> cons,
                              std::vector<Generator> gens);
  friend class PolyBuilder;
};

// p contains q (q subseteq p).
bool includes(const Polyhedron& p, const Polyhedron& q);

Polyhedron intersect(const Polyhedron& p, const Polyhedron& q);

// Convex hull of the union; the domain's join.
Polyhedron hull(const Polyhedron& p, const Polyhedron& q);

enum class WideningVariant {
  Standard,        // constraint retention plus the exchange clause
  BoundRetaining,  // also retains p's per-variable bounds q still entails
};

// Standard widening: constraints of p satisfied by q, plus constraints of q
// that are exchange-equivalent to a constraint of p. Does not require p
// included in q (hulls internally when not). The bound-retaining variant
// additionally keeps interval bounds of p that q entails even when the
// minimized constraint system expressed them only through sharper rotating
// facets; the caller must bound the number of applications per chain.
Polyhedron widen(const Polyhedron& p, const Polyhedron& q,
                 WideningVariant variant = WideningVariant::BoundRetaining);

// Exact shadow on the given variables. Variables in keep that p does not
// mention are ignored.
Polyhedron project(const Polyhedron& p, const std::set<VarId>& keep);
Polyhedron project_out(const Polyhedron& p, const std::set<VarId>& drop);

// Injective variable renaming. Throws std::invalid_argument if a target
// variable already occurs in p and is not itself renamed away.
Polyhedron rename_vars(const Polyhedron& p, const std::map<VarId, VarId>& subst);

}  // namespace polybound
