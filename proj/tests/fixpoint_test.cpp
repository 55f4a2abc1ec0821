#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "analysis_helpers.hpp"

using namespace polybound;
using namespace polybound::testing;

namespace {

const char* kFig1 = R"(
LOADI r1, 4
LOADI r2, 5
LOADI r3, 1000
LOADI r4, 9
STORE r3, r1
EQ r5, r1, r2
BNZ r4, r5
STORE r3, r2
LOAD r6, r3
)";

const char* kCounted = R"(
LOADI r1, 0
LOADI r2, 10
LOADI r3, 1
@head:
LT r4, r1, r2
BZ @exit, r4
ADD r1, r1, r3
BNZ @head, r3
@exit:
HALT
)";

mpq_class final_reg_max(const Analyzed& a, const RegName& r) {
  Extremum e = a.result.final_state.poly().maximize(*a.result.final_state.reg(r));
  REQUIRE(e.is_finite());
  return e.value;
}

}  // namespace

TEST_CASE("loop-free program stabilizes in one pass") {
  EngineOptions opt;
  opt.check_consistency = true;
  Analyzed a = run_analysis(kFig1, opt);
  CHECK(a.result.stabilized);
  CHECK(a.result.consistency_violations.empty());
  // One evaluation per node for the ascending pass (plus the descending one).
  CHECK(a.result.iterations <= 2 * a.prog.cfg.num_instructions + 2);
  CHECK(a.rep.loops.empty());

  // With the constants 4 != 5 the branch is decided: the fall-through edge
  // (L7,L8) is dead and the final memory value is exactly 4.
  CHECK(a.result.edge_states.at(Edge{6, 7}).is_bottom());
  CHECK(!a.result.edge_states.at(Edge{6, 8}).is_bottom());
  CHECK(final_reg_max(a, "r6") == 4);
}

TEST_CASE("provably empty self-loop exits") {
  Analyzed a = run_analysis("LOADI r0, 0\n@h:\nBNZ @h, r0\nHALT\n");
  CHECK(a.result.stabilized);
  CHECK(!a.result.final_state.is_bottom());
  // The exit is reached with r0 = 0.
  CHECK(final_reg_max(a, "r0") == 0);
}

TEST_CASE("counted loop gets exact bounds after narrowing") {
  EngineOptions opt;
  opt.check_consistency = true;
  Analyzed a = run_analysis(kCounted, opt);
  CHECK(a.result.stabilized);
  CHECK(a.result.consistency_violations.empty());
  REQUIRE(a.rep.loops.size() == 1);
  CHECK(a.rep.loops[0].label == "head");
  CHECK(a.rep.loops[0].max_bound == Bound::finite(10));
  CHECK(a.rep.loops[0].total_bound == Bound::finite(10));
  // The exit filter pins the counter exactly.
  CHECK(final_reg_max(a, "r1") == 10);
}

TEST_CASE("narrowing only tightens") {
  EngineOptions no_narrow;
  no_narrow.narrowing = false;
  Analyzed wide = run_analysis(kCounted, no_narrow);
  Analyzed tight = run_analysis(kCounted);
  // Without the descending pass the widened header leaves the counter open.
  CHECK(wide.rep.loops[0].max_bound.kind == Bound::Kind::Unbounded);
  CHECK(tight.rep.loops[0].max_bound == Bound::finite(10));
}

TEST_CASE("narrowing twice equals narrowing once") {
  EngineOptions opt;
  Analyzed a = run_analysis(kCounted, opt);

  LoadedProgram prog = load_program(kCounted);
  FreshVarGen fv;
  LoopHooks hooks(prog);
  EdgeHook hook = [&hooks](const Edge& e, AbstractState s, FreshVarGen& gen) {
    return hooks(e, std::move(s), gen);
  };
  AnalysisResult once = analyze(prog, fv, opt, loop_initial_state(prog.loops, fv), hook);
  AnalysisResult twice = narrow(prog, fv, opt, hook, once);
  for (const auto& [e, s] : once.edge_states)
    CHECK(states_equivalent(s, twice.edge_states.at(e)));
  BoundReport r1 = report(once, prog, hooks.relations());
  BoundReport r2 = report(twice, prog, hooks.relations());
  REQUIRE(r1.loops.size() == r2.loops.size());
  for (size_t i = 0; i < r1.loops.size(); ++i) {
    CHECK(r1.loops[i].max_bound == r2.loops[i].max_bound);
    CHECK(r1.loops[i].total_bound == r2.loops[i].total_bound);
  }
}

TEST_CASE("ascending fixpoint is a fixpoint") {
  EngineOptions opt;
  opt.narrowing = false;
  LoadedProgram prog = load_program(kCounted);
  FreshVarGen fv;
  LoopHooks hooks(prog);
  EdgeHook hook = [&hooks](const Edge& e, AbstractState s, FreshVarGen& gen) {
    return hooks(e, std::move(s), gen);
  };
  AnalysisResult res =
      analyze(prog, fv, opt, loop_initial_state(prog.loops, fv), hook);
  REQUIRE(res.stabilized);

  // Recomputing any node's input from its in-edges (widening at headers)
  // reproduces the stored states.
  for (int node = 0; node < prog.cfg.num_instructions; ++node) {
    AbstractState cand = AbstractState::bottom();
    for (const Edge& e : prog.cfg.pred[static_cast<size_t>(node)])
      cand = join_states(cand, res.edge_states.at(e), fv);
    bool header = false;
    for (const auto& l : prog.loops) header |= l.header == node;
    if (header) {
      const AbstractState& prev = res.header_inputs.at(node);
      CHECK(states_equivalent(widen_states(prev, cand, fv), prev));
    }
  }
}

TEST_CASE("worklist order does not change the result") {
  for (const char* text : {kFig1, kCounted}) {
    EngineOptions rpo;
    EngineOptions fifo;
    fifo.order = EngineOptions::Order::Fifo;
    Analyzed a = run_analysis(text, rpo);
    Analyzed b = run_analysis(text, fifo);
    REQUIRE(a.rep.loops.size() == b.rep.loops.size());
    for (size_t i = 0; i < a.rep.loops.size(); ++i) {
      CHECK(a.rep.loops[i].max_bound == b.rep.loops[i].max_bound);
      CHECK(a.rep.loops[i].total_bound == b.rep.loops[i].total_bound);
    }
    CHECK(states_equivalent(a.result.final_state, b.result.final_state));
  }
}

TEST_CASE("iteration cap reports non-stabilization") {
  EngineOptions opt;
  opt.max_iterations = 2;
  Analyzed a = run_analysis(kCounted, opt);
  CHECK(!a.result.stabilized);
}
