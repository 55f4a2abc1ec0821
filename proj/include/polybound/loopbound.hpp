#pragma once

#include <optional>

#include "polybound/fixpoint.hpp"

namespace polybound {

struct Bound {
  enum class Kind { Finite, Unbounded, Unknown };
  Kind kind = Kind::Unknown;
  mpz_class value;  // meaningful iff kind == Finite (always >= 0)

  static Bound finite(mpz_class v) { return {Kind::Finite, std::move(v)}; }
  static Bound unbounded() { return {Kind::Unbounded, 0}; }
  static Bound unknown() { return {Kind::Unknown, 0}; }
  bool operator==(const Bound& o) const {
    return kind == o.kind && (kind != Kind::Finite || value == o.value);
  }
  std::string to_string() const;  // decimal | "unbounded" | "unknown"
};

// A * x1 + B * x2 <= C with A > 0.
struct RelationCoeffs {
  mpq_class a, b, c;
};

struct LoopBoundEntry {
  int header = 0;
  std::string label;  // header label or "loop@<index>"
  Bound max_bound;
  Bound total_bound;
  std::optional<RelationCoeffs> relation;  // diagnostics when found
};

struct BoundReport {
  std::vector<LoopBoundEntry> loops;  // sorted by header
};

// Virtual register names; disjoint from the machine register set by shape.
RegName rm_name(int header);
RegName rt_name(int header);

// sum_{i=0}^{M-1} max(0, floor((C - B*i) / A)). Pre: A > 0, M >= 0.
mpz_class total(const RelationCoeffs& r, const mpz_class& M);

// Constraints A*x1 + B*x2 <= C with A > 0 present in the projection of p
// onto {x1, x2}; equalities contribute their A > 0 orientation.
std::vector<RelationCoeffs> relation_candidates(const Polyhedron& p, VarId x1,
                                                VarId x2);

// The candidate minimizing total(., M); any valid candidate gives a sound
// bound, the minimum is the tightest.
std::optional<RelationCoeffs> relation(const Polyhedron& p, VarId x1, VarId x2,
                                       const mpz_class& M);

// Program-entry state: top plus rm_l := -1 and rt_l := 0 per loop. The -1
// marks "not yet entered"; the entry-edge hook resets rm to 0, which keeps
// the header hull exact for counters of inner loops.
AbstractState loop_initial_state(const std::vector<LoopInfo>& loops,
                                 FreshVarGen& fv);

// Edge hook: rm := 0 on entry-edges, rm += 1 on back-edges (rt += 1 too for
// nested loops), and the total-bound exit constraint on exit-edges of nested
// loops. Keeps per-loop relation diagnostics.
class LoopHooks {
 public:
  explicit LoopHooks(const LoadedProgram& prog) : prog_(&prog) {}

  AbstractState operator()(const Edge& e, AbstractState s, FreshVarGen& fv);

  const std::map<int, RelationCoeffs>& relations() const { return relations_; }

 private:
  const LoadedProgram* prog_;
  std::map<int, RelationCoeffs> relations_;  // by inner-loop header
};

BoundReport report(const AnalysisResult& result, const LoadedProgram& prog,
                   const std::map<int, RelationCoeffs>& relations);

}  // namespace polybound
