#include "polybound/loopbound.hpp"

#include <cassert>

namespace polybound {

std::string Bound::to_string() const {
  switch (kind) {
    case Kind::Finite:
      return value.get_str();
    case Kind::Unbounded:
      return "unbounded";
    case Kind::Unknown:
      return "unknown";
  }
  return "?";
}

RegName rm_name(int header) { return "rm_" + std::to_string(header); }
RegName rt_name(int header) { return "rt_" + std::to_string(header); }

namespace {

mpz_class floor_q(const mpq_class& q) {
  mpz_class out;
  mpz_fdiv_q(out.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
  return out;
}

// The hook skips totals whose round count is absurd rather than summing
// forever; the bound is then simply not added (sound).
const long kMaxRounds = 1 << 20;

}  // namespace

mpz_class total(const RelationCoeffs& r, const mpz_class& M) {
  assert(r.a > 0 && M >= 0);
  mpz_class sum = 0;
  for (mpz_class i = 0; i < M; ++i) {
    mpq_class bound = (r.c - r.b * mpq_class(i)) / r.a;
    mpz_class term = floor_q(bound);
    if (term > 0) sum += term;
  }
  return sum;
}

std::vector<RelationCoeffs> relation_candidates(const Polyhedron& p, VarId x1,
                                                VarId x2) {
  std::vector<RelationCoeffs> out;
  if (p.is_empty() || x1 == x2) return out;
  Polyhedron proj = project(p, {x1, x2});
  for (const auto& c : proj.constraints()) {
    mpq_class a1 = 0, a2 = 0;
    for (const auto& [v, coef] : c.terms()) {
      if (v == x1) a1 = coef;
      if (v == x2) a2 = coef;
    }
    mpq_class k(c.constant());
    if (c.rel() == Rel::Le) {
      if (a1 > 0) out.push_back({a1, a2, k});
    } else {
      if (a1 > 0) out.push_back({a1, a2, k});
      if (-a1 > 0) out.push_back({-a1, -a2, -k});
    }
  }
  return out;
}

std::optional<RelationCoeffs> relation(const Polyhedron& p, VarId x1, VarId x2,
                                       const mpz_class& M) {
  std::optional<RelationCoeffs> best;
  std::optional<mpz_class> best_total;
  for (const RelationCoeffs& cand : relation_candidates(p, x1, x2)) {
    mpz_class t = total(cand, M);
    if (!best_total || t < *best_total) {
      best = cand;
      best_total = t;
    }
  }
  return best;
}

AbstractState loop_initial_state(const std::vector<LoopInfo>& loops,
                                 FreshVarGen& fv) {
  AbstractState s = AbstractState::top();
  for (const LoopInfo& l : loops) {
    Instruction init_rm;
    init_rm.op = Opcode::Loadi;
    init_rm.rd = rm_name(l.header);
    init_rm.imm = -1;
    s = update(init_rm, s, fv);
    Instruction init_rt;
    init_rt.op = Opcode::Loadi;
    init_rt.rd = rt_name(l.header);
    init_rt.imm = 0;
    s = update(init_rt, s, fv);
  }
  return s;
}

namespace {

// rm += 1 (the paper's ADD with a constant addend).
AbstractState increment(AbstractState s, const RegName& r, FreshVarGen& fv) {
  std::optional<VarId> v = s.reg(r);
  if (!v) return s;
  VarId xi = fv.fresh();
  s.set_poly(intersect(
      s.poly(),
      Polyhedron::of({LinearConstraint({{xi, 1}, {*v, -1}}, Rel::Eq, 1)})));
  s.bind_reg(r, xi);
  return gc(s);
}

AbstractState exit_total(AbstractState s, const LoopInfo& inner, int outer,
                         FreshVarGen& fv,
                         std::map<int, RelationCoeffs>& relations) {
  std::optional<VarId> vrm_i = s.reg(rm_name(inner.header));
  std::optional<VarId> vrm_o = s.reg(rm_name(outer));
  std::optional<VarId> vrt = s.reg(rt_name(inner.header));
  if (!vrm_i || !vrm_o || !vrt) return s;

  Extremum m_raw = s.poly().maximize(*vrm_o);
  if (!m_raw.is_finite()) return s;
  // rm_o holds the current round index; the round count is one more.
  mpz_class rounds = floor_q(m_raw.value) + 1;
  if (rounds < 0) rounds = 0;
  if (rounds > kMaxRounds) return s;

  std::optional<RelationCoeffs> rel =
      relation(s.poly(), *vrm_i, *vrm_o, rounds);
  if (!rel) return s;
  mpz_class t = total(*rel, rounds);
  relations[inner.header] = *rel;
  s.set_poly(intersect(
      s.poly(), Polyhedron::of({LinearConstraint::le(*vrt, mpq_class(t))})));
  if (s.poly().is_empty()) return AbstractState::bottom();
  return s;
}

}  // namespace

AbstractState LoopHooks::operator()(const Edge& e, AbstractState s,
                                    FreshVarGen& fv) {
  if (s.is_bottom()) return s;
  // Exit constraints read the counters of the round being left, so they run
  // before the increments; entry resets come last.
  for (const LoopInfo& l : prog_->loops) {
    if (l.parent >= 0 && l.exit_edges.count(e))
      s = exit_total(std::move(s), l, l.parent, fv, relations_);
    if (s.is_bottom()) return s;
  }
  for (const LoopInfo& l : prog_->loops) {
    if (l.back_edges.count(e)) {
      s = increment(std::move(s), rm_name(l.header), fv);
      if (l.parent >= 0) s = increment(std::move(s), rt_name(l.header), fv);
    }
  }
  for (const LoopInfo& l : prog_->loops) {
    if (l.entry_edges.count(e)) {
      Instruction reset;
      reset.op = Opcode::Loadi;
      reset.rd = rm_name(l.header);
      reset.imm = 0;
      s = update(reset, s, fv);
    }
  }
  return s;
}

BoundReport report(const AnalysisResult& result, const LoadedProgram& prog,
                   const std::map<int, RelationCoeffs>& relations) {
  BoundReport rep;
  const AbstractState& fin = result.final_state;
  for (const LoopInfo& l : prog.loops) {
    LoopBoundEntry entry;
    entry.header = l.header;
    entry.label = l.label.empty() ? "loop@" + std::to_string(l.header) : l.label;

    auto bound_of = [&](const RegName& r) {
      if (fin.is_bottom()) return Bound::unknown();
      std::optional<VarId> v = fin.reg(r);
      if (!v) return Bound::unknown();
      Extremum ext = fin.poly().maximize(*v);
      switch (ext.kind) {
        case Extremum::Kind::Finite: {
          mpz_class b = floor_q(ext.value);
          if (b < 0) b = 0;
          return Bound::finite(b);
        }
        case Extremum::Kind::Unbounded:
          return Bound::unbounded();
        case Extremum::Kind::Empty:
          return Bound::unknown();
      }
      return Bound::unknown();
    };

    entry.max_bound = bound_of(rm_name(l.header));
    if (l.parent < 0) {
      // A top-level loop runs once per program run: total equals max.
      entry.total_bound = entry.max_bound;
    } else {
      Bound t = bound_of(rt_name(l.header));
      entry.total_bound = t.kind == Bound::Kind::Finite ? t : Bound::unknown();
    }
    auto it = relations.find(l.header);
    if (it != relations.end()) entry.relation = it->second;
    rep.loops.push_back(std::move(entry));
  }
  return rep;
}

}  // namespace polybound
