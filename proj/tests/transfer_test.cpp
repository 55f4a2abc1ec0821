#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "polybound/fixpoint.hpp"
#include "polybound/transfer.hpp"

using namespace polybound;

namespace {

Instruction binop(Opcode op, RegName rd, RegName ra, RegName rb) {
  Instruction i;
  i.op = op;
  i.rd = std::move(rd);
  i.ra = std::move(ra);
  i.rb = std::move(rb);
  return i;
}

Instruction loadi(RegName rd, long long imm) {
  Instruction i;
  i.op = Opcode::Loadi;
  i.rd = std::move(rd);
  i.imm = imm;
  return i;
}

Instruction load(RegName rd, RegName ra) {
  Instruction i;
  i.op = Opcode::Load;
  i.rd = std::move(rd);
  i.ra = std::move(ra);
  return i;
}

Instruction store(RegName addr, RegName value) {
  Instruction i;
  i.op = Opcode::Store;
  i.rd = std::move(addr);
  i.ra = std::move(value);
  return i;
}

Instruction branch(Opcode op, RegName cond) {
  Instruction i;
  i.op = op;
  i.ra = std::move(cond);
  i.target = 0;
  return i;
}

mpq_class reg_max(const AbstractState& s, const RegName& r) {
  Extremum e = s.poly().maximize(*s.reg(r));
  REQUIRE(e.is_finite());
  return e.value;
}

mpq_class reg_min(const AbstractState& s, const RegName& r) {
  Extremum e = s.poly().minimize(*s.reg(r));
  REQUIRE(e.is_finite());
  return e.value;
}

}  // namespace

TEST_CASE("loadi binds a fresh constrained variable") {
  FreshVarGen fv;
  AbstractState s = AbstractState::top();
  s = update(loadi("r1", 4), s, fv);
  CHECK(reg_max(s, "r1") == 4);
  VarId first = *s.reg("r1");
  s = update(loadi("r1", 7), s, fv);
  CHECK(*s.reg("r1") != first);
  CHECK(reg_max(s, "r1") == 7);
  CHECK(reg_min(s, "r1") == 7);
}

TEST_CASE("binop updates") {
  FreshVarGen fv;
  AbstractState s = AbstractState::top();
  s = update(loadi("r2", 2), s, fv);
  s = update(loadi("r3", 3), s, fv);

  SUBCASE("ADD is linear") {
    AbstractState t = update(binop(Opcode::Add, "r1", "r2", "r3"), s, fv);
    CHECK(reg_max(t, "r1") == 5);
    CHECK(reg_min(t, "r1") == 5);
  }
  SUBCASE("SUB is linear") {
    AbstractState t = update(binop(Opcode::Sub, "r1", "r2", "r3"), s, fv);
    CHECK(reg_max(t, "r1") == -1);
  }
  SUBCASE("EQ records the difference with a witness") {
    AbstractState t = update(binop(Opcode::Eq, "r5", "r2", "r3"), s, fv);
    CHECK(reg_max(t, "r5") == -1);
    CHECK(t.witness("r5") == WitnessKind::Eq);
  }
  SUBCASE("XOR leaves the destination unconstrained") {
    AbstractState t = update(binop(Opcode::Xor, "r1", "r2", "r3"), s, fv);
    CHECK(t.poly().maximize(*t.reg("r1")).kind == Extremum::Kind::Unbounded);
    CHECK(t.witness("r1") == WitnessKind::None);
  }
  SUBCASE("MUL by a pinned constant is linear") {
    AbstractState u = s;
    u = update(binop(Opcode::Add, "r4", "r2", "r3"), u, fv);  // r4 = 5
    u = update(binop(Opcode::Mul, "r1", "r2", "r4"), u, fv);  // 2 * 5
    CHECK(reg_max(u, "r1") == 10);
  }
  SUBCASE("MUL of two unconstrained operands is opaque") {
    AbstractState u = update(binop(Opcode::Mul, "r1", "r8", "r9"), s, fv);
    CHECK(u.poly().maximize(*u.reg("r1")).kind == Extremum::Kind::Unbounded);
    // the operands got bound on first use
    CHECK(u.reg("r8").has_value());
    CHECK(u.reg("r9").has_value());
  }
}

TEST_CASE("branch filters") {
  FreshVarGen fv;

  SUBCASE("BNZ on a plain value constrains only the fall-through") {
    AbstractState s = AbstractState::top();
    s = update(loadi("r1", 4), s, fv);
    s = update(loadi("r2", 5), s, fv);
    s = update(binop(Opcode::Eq, "r5", "r1", "r2"), s, fv);
    BranchOut out = update_branch(branch(Opcode::Bnz, "r5"), s, fv);
    // taken gains nothing
    CHECK(includes(out.taken.poly(), s.poly()));
    CHECK(includes(s.poly(), out.taken.poly()));
    // not-taken adds x7 = 0, contradicting x7 = 4 - 5
    CHECK(out.not_taken.is_bottom());
  }

  SUBCASE("BZ keeps the zero side; negation is inexpressible") {
    AbstractState s = AbstractState::top();
    s = update(loadi("r1", 0), s, fv);
    BranchOut out = update_branch(branch(Opcode::Bz, "r1"), s, fv);
    CHECK(!out.taken.is_bottom());
    CHECK(reg_max(out.taken, "r1") == 0);
    // nothing is added on the other side, by the negation convention
    CHECK(includes(out.not_taken.poly(), s.poly()));
    CHECK(includes(s.poly(), out.not_taken.poly()));
  }

  SUBCASE("branch on an unbound register changes nothing") {
    AbstractState s = AbstractState::top();
    s = update(loadi("r1", 1), s, fv);
    BranchOut out = update_branch(branch(Opcode::Bnz, "r9"), s, fv);
    CHECK(states_equivalent(out.taken, s));
    CHECK(states_equivalent(out.not_taken, s));
  }

  SUBCASE("LT witness makes both sides expressible") {
    AbstractState s = AbstractState::top();
    s = update(loadi("r2", 10), s, fv);
    // r1 in [0, 10]
    VarId v = fv.fresh();
    AbstractState t = s;
    t.bind_reg("r1", v);
    t.set_poly(intersect(t.poly(),
                         Polyhedron::of({LinearConstraint::ge(v, 0),
                                         LinearConstraint::le(v, 10)})));
    t = update(binop(Opcode::Lt, "r5", "r1", "r2"), t, fv);
    CHECK(t.witness("r5") == WitnessKind::Lt);
    BranchOut out = update_branch(branch(Opcode::Bz, "r5"), t, fv);
    // taken <=> !(r1 < 10) <=> r1 = 10 here
    CHECK(reg_max(out.taken, "r1") == 10);
    CHECK(reg_min(out.taken, "r1") == 10);
    // not-taken <=> r1 < 10 <=> r1 <= 9 over the integers
    CHECK(reg_max(out.not_taken, "r1") == 9);
  }
}

TEST_CASE("store and load") {
  FreshVarGen fv;
  AbstractState s = AbstractState::top();
  s = update(loadi("r1", 4), s, fv);
  s = update(loadi("r3", 1000), s, fv);
  s = update(store("r3", "r1"), s, fv);  // Create

  REQUIRE(s.mem().size() == 1);
  VarId addr = s.mem().begin()->first;
  VarId val = s.mem().begin()->second;
  CHECK(alias(s, addr, *s.reg("r3")) == AliasResult::Equivalent);
  CHECK(s.poly().maximize(val) == Extremum::finite(4));

  SUBCASE("load through an equivalent address propagates the value") {
    AbstractState t = update(load("r6", "r3"), s, fv);
    CHECK(reg_max(t, "r6") == 4);
    CHECK(reg_min(t, "r6") == 4);
  }

  SUBCASE("load from an unknown address is unconstrained") {
    AbstractState t = update(loadi("r4", 2000), s, fv);
    t = update(load("r6", "r4"), t, fv);
    CHECK(t.poly().maximize(*t.reg("r6")).kind == Extremum::Kind::Unbounded);
  }

  SUBCASE("load from an address with no value record is unconstrained") {
    AbstractState t = s;
    VarId bare = fv.fresh();
    t.set_poly(intersect(t.poly(),
                         Polyhedron::of({LinearConstraint::eq(bare, 2000)})));
    t.set_class(bare, VarClass::Address);
    t = update(loadi("r4", 2000), t, fv);
    t = update(load("r6", "r4"), t, fv);
    CHECK(t.poly().maximize(*t.reg("r6")).kind == Extremum::Kind::Unbounded);
  }

  SUBCASE("store to an equivalent address replaces without a new location") {
    AbstractState t = update(loadi("r2", 5), s, fv);
    t = update(store("r3", "r2"), t, fv);  // Replace
    CHECK(t.mem().size() == 1);
    CHECK(t.address_vars().size() == 1);
    AbstractState after = update(load("r6", "r3"), t, fv);
    CHECK(reg_max(after, "r6") == 5);
    CHECK(reg_min(after, "r6") == 5);
  }

  SUBCASE("store through a may-aliasing pointer joins old and new values") {
    // pointer in [999, 1001] overlaps the known cell at 1000
    AbstractState t = s;
    VarId ptr = fv.fresh();
    t.bind_reg("r7", ptr);
    t.set_poly(intersect(t.poly(),
                         Polyhedron::of({LinearConstraint::ge(ptr, 999),
                                         LinearConstraint::le(ptr, 1001)})));
    t = update(loadi("r2", 9), t, fv);
    t = update(store("r7", "r2"), t, fv);
    // the known cell now holds 4 or 9; a second location was created
    CHECK(t.address_vars().size() == 2);
    AbstractState after = update(load("r6", "r3"), t, fv);
    CHECK(reg_max(after, "r6") == 9);
    CHECK(reg_min(after, "r6") == 4);
  }
}

TEST_CASE("join of edge states") {
  FreshVarGen fv;

  SUBCASE("join with bottom is neutral") {
    AbstractState s = AbstractState::top();
    s = update(loadi("r1", 3), s, fv);
    CHECK(states_equivalent(join_states(AbstractState::bottom(), s, fv), s));
    CHECK(states_equivalent(join_states(s, AbstractState::bottom(), fv), s));
  }

  SUBCASE("join is idempotent") {
    AbstractState s = AbstractState::top();
    s = update(loadi("r1", 3), s, fv);
    s = update(loadi("r3", 1000), s, fv);
    s = update(store("r3", "r1"), s, fv);
    CHECK(states_equivalent(join_states(s, s, fv), s));
  }

  SUBCASE("disjoint register domains relax to fresh variables") {
    AbstractState s1 = AbstractState::top();
    s1 = update(loadi("r1", 1), s1, fv);
    AbstractState s2 = AbstractState::top();
    s2 = update(loadi("r2", 2), s2, fv);
    AbstractState j = join_states(s1, s2, fv);
    REQUIRE(j.reg("r1").has_value());
    REQUIRE(j.reg("r2").has_value());
    CHECK(j.poly().maximize(*j.reg("r1")).kind == Extremum::Kind::Unbounded);
    CHECK(j.poly().maximize(*j.reg("r2")).kind == Extremum::Kind::Unbounded);
  }

  SUBCASE("two stores to the same cell hull the stored values") {
    // Common prefix: cell at 1000 holds 4.
    AbstractState base = AbstractState::top();
    base = update(loadi("r1", 4), base, fv);
    base = update(loadi("r3", 1000), base, fv);
    base = update(store("r3", "r1"), base, fv);
    // Path A stores 7 over it; path B leaves it.
    AbstractState a = update(loadi("r2", 7), base, fv);
    a = update(store("r3", "r2"), a, fv);
    AbstractState b = base;

    AbstractState j = join_states(a, b, fv);
    REQUIRE(j.mem().size() == 1);
    VarId cell = j.mem().begin()->second;
    CHECK(j.poly().maximize(cell) == Extremum::finite(7));
    CHECK(j.poly().minimize(cell) == Extremum::finite(4));
    CHECK(is_consistent(j));

    // Loading through r3 afterwards sees the interval.
    AbstractState after = update(load("r6", "r3"), j, fv);
    CHECK(reg_max(after, "r6") == 7);
    CHECK(reg_min(after, "r6") == 4);
  }

  SUBCASE("independently created equal addresses unify") {
    AbstractState base = AbstractState::top();
    base = update(loadi("r3", 1000), base, fv);
    AbstractState a = update(loadi("r1", 4), base, fv);
    a = update(store("r3", "r1"), a, fv);
    AbstractState b = update(loadi("r1", 6), base, fv);
    b = update(store("r3", "r1"), b, fv);

    AbstractState j = join_states(a, b, fv);
    CHECK(is_consistent(j));
    AbstractState after = update(load("r6", "r3"), j, fv);
    CHECK(reg_max(after, "r6") == 6);
    CHECK(reg_min(after, "r6") == 4);
  }
}

TEST_CASE("widening of states") {
  FreshVarGen fv;

  SUBCASE("identical states stay put") {
    AbstractState s = AbstractState::top();
    s = update(loadi("r1", 3), s, fv);
    CHECK(states_equivalent(widen_states(s, s, fv), s));
  }

  SUBCASE("growing counter loses its upper bound") {
    AbstractState s1 = AbstractState::top();
    s1 = update(loadi("r1", 0), s1, fv);
    VarId v = fv.fresh();
    AbstractState s2 = AbstractState::top();
    s2.bind_reg("r1", v);
    s2.set_poly(Polyhedron::of({LinearConstraint::ge(v, 0),
                                LinearConstraint::le(v, 1)}));
    AbstractState w = widen_states(s1, s2, fv);
    CHECK(w.poly().maximize(*w.reg("r1")).kind == Extremum::Kind::Unbounded);
    CHECK(w.poly().minimize(*w.reg("r1")) == Extremum::finite(0));
  }

  SUBCASE("stable relations survive widening") {
    // rm = i with i = 0, widened with rm = i, 0 <= i <= 1.
    FreshVarGen gen;
    VarId i1 = gen.fresh(), rm1 = gen.fresh();
    AbstractState s1 = AbstractState::top();
    s1.bind_reg("r1", i1);
    s1.bind_reg("r9", rm1);
    s1.set_poly(Polyhedron::of({LinearConstraint::eq(i1, 0),
                                LinearConstraint::eq_vars(rm1, i1)}));
    VarId i2 = gen.fresh(), rm2 = gen.fresh();
    AbstractState s2 = AbstractState::top();
    s2.bind_reg("r1", i2);
    s2.bind_reg("r9", rm2);
    s2.set_poly(Polyhedron::of({LinearConstraint::ge(i2, 0),
                                LinearConstraint::le(i2, 1),
                                LinearConstraint::eq_vars(rm2, i2)}));
    AbstractState w = widen_states(s1, s2, gen);
    VarId wi = *w.reg("r1"), wrm = *w.reg("r9");
    CHECK(w.poly().entails(LinearConstraint::eq_vars(wrm, wi)));
    CHECK(w.poly().minimize(wi) == Extremum::finite(0));
    CHECK(w.poly().maximize(wi).kind == Extremum::Kind::Unbounded);
  }
}

TEST_CASE("update monotonicity spot checks") {
  // Same bindings, p included in q: the transformer preserves inclusion.
  // Separate generators with identical counters give identical fresh names.
  auto mk = [](bool wide, FreshVarGen& fv) {
    AbstractState s = AbstractState::top();
    VarId a = fv.fresh(), b = fv.fresh();
    s.bind_reg("r2", a);
    s.bind_reg("r3", b);
    std::vector<LinearConstraint> cs = {LinearConstraint::ge(a, 0),
                                        LinearConstraint::le(a, wide ? 10 : 3),
                                        LinearConstraint::eq(b, 2)};
    if (!wide) cs.push_back(LinearConstraint::le(b, 2));
    s.set_poly(Polyhedron::of(cs));
    return s;
  };
  std::vector<Instruction> ops = {
      binop(Opcode::Add, "r1", "r2", "r3"), binop(Opcode::Sub, "r1", "r2", "r3"),
      binop(Opcode::Mul, "r1", "r2", "r3"), binop(Opcode::Eq, "r1", "r2", "r3"),
      binop(Opcode::Lt, "r1", "r2", "r3"),  binop(Opcode::Xor, "r1", "r2", "r3"),
      loadi("r1", 5)};
  for (const auto& ins : ops) {
    FreshVarGen fv_small, fv_big;
    AbstractState small = mk(false, fv_small);
    AbstractState big = mk(true, fv_big);
    REQUIRE(fv_small.next_id() == fv_big.next_id());
    CHECK(includes(big.poly(), small.poly()));
    AbstractState rs = update(ins, small, fv_small);
    AbstractState rb = update(ins, big, fv_big);
    CHECK(includes(rb.poly(), rs.poly()));
  }
}
