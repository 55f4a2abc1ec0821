#include "polybound/transfer.hpp"

#include <cassert>
#include <optional>

namespace polybound {

namespace {

// Unify + gc close out every transfer; empties collapse to the canonical
// bottom so edge states stay comparable.
AbstractState finish(AbstractState s, FreshVarGen& fv) {
  if (s.is_bottom() || s.poly().is_empty()) return AbstractState::bottom();
  s = unify(s, fv);
  return gc(s);
}

VarId ensure_bound(AbstractState& s, const RegName& r, FreshVarGen& fv) {
  if (auto v = s.reg(r)) return *v;
  VarId v = fv.fresh();
  s.bind_reg(r, v);
  return v;
}

std::optional<mpq_class> singleton_value(const Polyhedron& p, VarId v) {
  Extremum hi = p.maximize(v);
  if (!hi.is_finite()) return std::nullopt;
  Extremum lo = p.minimize(v);
  if (!lo.is_finite() || lo.value != hi.value) return std::nullopt;
  return hi.value;
}

AbstractState update_loadi(const Instruction& ins, AbstractState s,
                           FreshVarGen& fv) {
  VarId xi = fv.fresh();
  mpq_class c(static_cast<long>(ins.imm));
  s.set_poly(intersect(s.poly(), Polyhedron::of({LinearConstraint::eq(xi, c)})));
  s.bind_reg(ins.rd, xi);
  return s;
}

AbstractState update_binop(const Instruction& ins, AbstractState s,
                           FreshVarGen& fv) {
  VarId va = ensure_bound(s, ins.ra, fv);
  VarId vb = ensure_bound(s, ins.rb, fv);

  std::map<VarId, mpq_class> expr;  // xi - expr(va, vb) = 0
  WitnessKind w = WitnessKind::None;
  bool linear = true;
  switch (ins.op) {
    case Opcode::Add:
      expr[va] += 1;
      expr[vb] += 1;
      break;
    case Opcode::Sub:
      expr[va] += 1;
      expr[vb] -= 1;
      break;
    case Opcode::Eq:
      expr[va] += 1;
      expr[vb] -= 1;
      w = WitnessKind::Eq;
      break;
    case Opcode::Lt:
      expr[va] += 1;
      expr[vb] -= 1;
      w = WitnessKind::Lt;
      break;
    case Opcode::Mul:
      // Linear only when one operand is pinned to a constant.
      if (auto k = singleton_value(s.poly(), va)) {
        expr[vb] += *k;
      } else if (auto k2 = singleton_value(s.poly(), vb)) {
        expr[va] += *k2;
      } else {
        linear = false;
      }
      break;
    default:  // And, Or, Xor
      linear = false;
      break;
  }

  VarId xi = fv.fresh();
  if (linear) {
    std::map<VarId, mpq_class> terms = expr;
    for (auto& [v, c] : terms) c = -c;
    terms[xi] += 1;
    s.set_poly(intersect(s.poly(),
                         Polyhedron::of({LinearConstraint(terms, Rel::Eq, 0)})));
  }
  s.bind_reg(ins.rd, xi, linear ? w : WitnessKind::None);
  return s;
}

AbstractState update_load(const Instruction& ins, AbstractState s,
                          FreshVarGen& fv) {
  ensure_bound(s, ins.ra, fv);
  std::optional<VarId> a = lookup_equivalent_address(s, ins.ra);
  VarId xi = fv.fresh();
  if (a) {
    if (std::optional<VarId> val = s.mem_value(*a)) {
      s.set_poly(intersect(
          s.poly(), Polyhedron::of({LinearConstraint::eq_vars(xi, *val)})));
    }
  }
  s.bind_reg(ins.rd, xi);
  return s;
}

AbstractState replace_value(VarId addr, const RegName& rv, AbstractState s,
                            FreshVarGen& fv) {
  VarId vv = *s.reg(rv);
  VarId xi = fv.fresh();
  s.set_poly(intersect(s.poly(),
                       Polyhedron::of({LinearConstraint::eq_vars(xi, vv)})));
  s.bind_mem(addr, xi);
  return s;
}

AbstractState create_mapping(const RegName& ra, const RegName& rv,
                             AbstractState s, FreshVarGen& fv) {
  VarId va = *s.reg(ra), vv = *s.reg(rv);
  VarId xi = fv.fresh(), xj = fv.fresh();
  s.set_poly(intersect(s.poly(),
                       Polyhedron::of({LinearConstraint::eq_vars(xi, va),
                                       LinearConstraint::eq_vars(xj, vv)})));
  s.bind_mem(xi, xj);
  return s;
}

AbstractState update_store(const Instruction& ins, AbstractState s,
                           FreshVarGen& fv) {
  const RegName& ra = ins.rd;  // address register
  const RegName& rv = ins.ra;  // value register
  VarId va = ensure_bound(s, ra, fv);
  ensure_bound(s, rv, fv);

  // Weak update: every may-aliased location might be the one written.
  std::vector<VarId> overlapping;
  for (VarId a : s.address_vars())
    if (alias(s, a, va) == AliasResult::Overlapping) overlapping.push_back(a);
  std::optional<VarId> equiv = lookup_equivalent_address(s, ra);

  AbstractState acc = s;
  for (VarId a : overlapping)
    acc = join_states(replace_value(a, rv, s, fv), acc, fv);

  return equiv ? replace_value(*equiv, rv, acc, fv)
               : create_mapping(ra, rv, acc, fv);
}

}  // namespace

AbstractState update(const Instruction& ins, const AbstractState& in,
                     FreshVarGen& fv) {
  if (in.is_bottom()) return AbstractState::bottom();
  switch (ins.op) {
    case Opcode::Loadi:
      return finish(update_loadi(ins, in, fv), fv);
    case Opcode::Load:
      return finish(update_load(ins, in, fv), fv);
    case Opcode::Store:
      return finish(update_store(ins, in, fv), fv);
    case Opcode::Halt:
    case Opcode::Bnz:
    case Opcode::Bz:
      return in;
    default:
      assert(is_binop(ins.op));
      return finish(update_binop(ins, in, fv), fv);
  }
}

BranchOut update_branch(const Instruction& ins, const AbstractState& in,
                        FreshVarGen& fv) {
  assert(is_branch(ins.op));
  if (in.is_bottom()) return {in, in};
  std::optional<VarId> cond = in.reg(ins.ra);
  if (!cond) return {in, in};  // no constraint on an unbound register

  VarId x = *cond;
  WitnessKind w = in.witness(ins.ra);
  bool bnz = ins.op == Opcode::Bnz;

  auto filtered = [&](std::optional<LinearConstraint> c) {
    if (!c) return in;
    AbstractState s = in;
    s.set_poly(intersect(in.poly(), Polyhedron::of({*c})));
    return finish(std::move(s), fv);
  };

  std::optional<LinearConstraint> taken_c, not_taken_c;
  switch (w) {
    case WitnessKind::Lt: {
      // x = a - b with the predicate a < b, i.e. x <= -1 over the integers.
      LinearConstraint neg = LinearConstraint::le(x, -1);
      LinearConstraint nonneg = LinearConstraint::ge(x, 0);
      taken_c = bnz ? neg : nonneg;
      not_taken_c = bnz ? nonneg : neg;
      break;
    }
    case WitnessKind::None:
    case WitnessKind::Eq:
      // The predicate is x != 0; only the x = 0 side is expressible.
      if (bnz)
        not_taken_c = LinearConstraint::eq(x, 0);
      else
        taken_c = LinearConstraint::eq(x, 0);
      break;
    case WitnessKind::Top:
      break;  // conflicting producers joined: no filter is sound
  }
  return {filtered(taken_c), filtered(not_taken_c)};
}

namespace {

struct Side {
  Polyhedron p;
  std::map<RegName, VarId> regs;
  std::map<VarId, VarId> mem;

  bool occupied(VarId v) const {
    for (const auto& [r, rv] : regs)
      if (rv == v) return true;
    for (const auto& [a, av] : mem)
      if (a == v || av == v) return true;
    return false;
  }
};

AbstractState combine(const AbstractState& s1, const AbstractState& s2,
                      FreshVarGen& fv, bool widening,
                      WideningVariant variant = WideningVariant::BoundRetaining) {
  // Address pairs are tested for equivalence in p1 n p2 (Algorithm 1 line 1).
  // Identical variables are equivalent regardless, so the intersection is
  // only materialized when some cross pair needs it.
  std::optional<Polyhedron> p12;
  auto pair_equivalent = [&](VarId x1, VarId x2) {
    if (x1 == x2) return true;
    if (!p12) p12 = intersect(s1.poly(), s2.poly());
    return alias_in_poly(*p12, x1, x2) == AliasResult::Equivalent;
  };

  Side w{s1.poly(), s1.regs(), s1.mem()};

  // Displace an occupant of `target` out of the polyhedron so the rename
  // below cannot fold two unrelated variables together (which would be
  // unsound). Occupants still bound in the mappings cannot be displaced.
  auto clear_target = [&](VarId target) {
    if (!w.p.mentions(target)) return true;
    if (w.occupied(target)) return false;
    w.p = rename_vars(w.p, {{target, fv.fresh()}});
    return true;
  };

  // Address unification (pairs equivalent in p1 n p2), lowest pair first.
  std::set<VarId> renamed_sources, used_targets;
  std::vector<VarId> a1 = s1.address_vars();
  for (VarId x1 : a1) {
    if (renamed_sources.count(x1)) continue;
    for (VarId x2 : s2.address_vars()) {
      if (used_targets.count(x2)) continue;
      if (!pair_equivalent(x1, x2)) continue;

      if (x1 != x2) {
        if (w.occupied(x2) || w.p.mentions(x2)) continue;  // cannot unify
        std::optional<VarId> y1v = w.mem.count(x1)
                                       ? std::optional<VarId>(w.mem[x1])
                                       : std::nullopt;
        if (w.p.mentions(x1)) w.p = rename_vars(w.p, {{x1, x2}});
        if (y1v) {
          w.mem.erase(x1);
          w.mem[x2] = *y1v;
        }
      }
      // delta-value unification for the paired location.
      auto it1 = w.mem.find(x2);
      auto it2 = s2.mem().find(x2);
      if (it1 != w.mem.end() && it2 != s2.mem().end() &&
          it1->second != it2->second) {
        VarId y1 = it1->second, y2 = it2->second;
        if (clear_target(y2)) {
          if (w.p.mentions(y1)) w.p = rename_vars(w.p, {{y1, y2}});
          w.mem[x2] = y2;
        }
      }
      renamed_sources.insert(x1);
      used_targets.insert(x2);
      break;
    }
  }

  // Register unification: the common register's value gets s2's name.
  for (const auto& [r, v2] : s2.regs()) {
    auto it = w.regs.find(r);
    if (it == w.regs.end() || it->second == v2) continue;
    if (!clear_target(v2)) continue;
    if (w.p.mentions(it->second)) w.p = rename_vars(w.p, {{it->second, v2}});
    it->second = v2;
  }

  Polyhedron joined =
      widening ? widen(w.p, s2.poly(), variant) : hull(w.p, s2.poly());

  AbstractState out;
  out.set_poly(joined);
  std::set<RegName> all_regs;
  for (const auto& [r, v] : w.regs) all_regs.insert(r);
  for (const auto& [r, v] : s2.regs()) all_regs.insert(r);
  for (const RegName& r : all_regs) {
    auto i1 = w.regs.find(r);
    auto i2 = s2.regs().find(r);
    if (i1 != w.regs.end() && i2 != s2.regs().end() &&
        i1->second == i2->second) {
      WitnessKind wk = s1.witness(r) == s2.witness(r) ? s1.witness(r)
                                                      : WitnessKind::Top;
      out.bind_reg(r, i1->second, wk);
    } else {
      out.bind_reg(r, fv.fresh());  // one-sided or mismatched: no constraints
    }
  }
  std::set<VarId> all_addrs;
  for (const auto& [a, v] : w.mem) all_addrs.insert(a);
  for (const auto& [a, v] : s2.mem()) all_addrs.insert(a);
  for (VarId a : all_addrs) {
    auto i1 = w.mem.find(a);
    auto i2 = s2.mem().find(a);
    if (i1 != w.mem.end() && i2 != s2.mem().end() && i1->second == i2->second)
      out.bind_mem(a, i1->second);
    else
      out.bind_mem(a, fv.fresh());
  }
  return finish(std::move(out), fv);
}

}  // namespace

AbstractState join_states(const AbstractState& s1, const AbstractState& s2,
                          FreshVarGen& fv) {
  if (s1.is_bottom()) return s2;
  if (s2.is_bottom()) return s1;
  return combine(s1, s2, fv, false);
}

AbstractState widen_states(const AbstractState& s1, const AbstractState& s2,
                           FreshVarGen& fv, WideningVariant variant) {
  if (s1.is_bottom()) return s2;
  if (s2.is_bottom()) return s1;
  return combine(s1, s2, fv, true, variant);
}

}  // namespace polybound
