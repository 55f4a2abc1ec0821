#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "analysis_helpers.hpp"
#include "polybound/concrete.hpp"
#include "program_gen.hpp"

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

const char* kExample1 = R"(
LOADI r3, 0
LOADI r4, 10
LOADI r7, 1
LOADI r1, 0
@outer:
LT r5, r1, r4
BZ @done, r5
LOADI r2, 0
@inner:
LT r6, r2, r1
BZ @iend, r6
ADD r3, r3, r7
ADD r2, r2, r7
BNZ @inner, r7
@iend:
ADD r1, r1, r7
BNZ @outer, r7
@done:
HALT
)";

}  // namespace

TEST_CASE("Fig.1 trace follows the difference semantics") {
  LoadedProgram prog = load_program(kFig1);
  TraceResult t = run(prog, {}, 1000);
  CHECK(!t.step_cap_hit);
  CHECK(!t.stopped_on_undefined);
  // 4 != 5: the EQ witness is -1, nonzero, so the branch is taken and the
  // second store never runs.
  CHECK(t.edge_states.count(Edge{6, 8}) == 1);
  CHECK(t.edge_states.count(Edge{6, 7}) == 0);
  const auto& exit_vals = t.edge_states.at(Edge{8, prog.cfg.exit_node});
  REQUIRE(exit_vals.size() == 1);
  CHECK(exit_vals[0].mem.at(1000) == 4);
  CHECK(exit_vals[0].regs.at("r6") == 4);
}

TEST_CASE("straight-line programs record one valuation per edge") {
  LoadedProgram prog = load_program("LOADI r1, 2\nADD r2, r1, r1\nHALT\n");
  TraceResult t = run(prog, {}, 100);
  for (const Edge& e : prog.cfg.edges) {
    REQUIRE(t.edge_states.count(e) == 1);
    CHECK(t.edge_states.at(e).size() == 1);
  }
}

TEST_CASE("run is deterministic") {
  LoadedProgram prog = load_program(kExample1);
  TraceResult a = run(prog, {}, 100000);
  TraceResult b = run(prog, {}, 100000);
  CHECK(a.edge_states == b.edge_states);
}

TEST_CASE("Example 1 concrete loop counts") {
  LoadedProgram prog = load_program(kExample1);
  TraceResult t = run(prog, {}, 100000);
  CHECK(!t.step_cap_hit);
  int outer = prog.loops[0].header, inner = prog.loops[1].header;
  CHECK(t.loop_max.at(outer) == 10);
  CHECK(t.loop_total.at(outer) == 10);
  CHECK(t.loop_max.at(inner) == 9);
  CHECK(t.loop_total.at(inner) == 45);
}

TEST_CASE("step cap flags partial results") {
  LoadedProgram prog = load_program(kExample1);
  TraceResult t = run(prog, {}, 10);
  CHECK(t.step_cap_hit);
}

TEST_CASE("undefined reads stop the trace") {
  LoadedProgram prog = load_program("ADD r1, r2, r3\nHALT\n");
  TraceResult t = run(prog, {}, 100);
  CHECK(t.stopped_on_undefined);
  CHECK(t.edge_states.count(Edge{0, 1}) == 0);
}

TEST_CASE("soundness holds on the worked examples") {
  for (const char* text : {kFig1, kExample1}) {
    Analyzed a = run_analysis(text);
    TraceResult t = run(a.prog, {}, 100000);
    auto violations = check_soundness(a.result, t);
    CHECK(violations.empty());
  }
}

TEST_CASE("a corrupted abstract state is caught") {
  const char* two_stores =
      "LOADI r1, 4\nLOADI r2, 7\nLOADI r3, 1000\n"
      "STORE r3, r1\nSTORE r3, r2\nLOAD r4, r3\nHALT\n";
  Analyzed a = run_analysis(two_stores);
  TraceResult t = run(a.prog, {}, 1000);
  CHECK(check_soundness(a.result, t).empty());

  // Drop the second store's effect: pretend its out-edge still carries the
  // pre-store state, which claims the cell holds 4.
  AnalysisResult corrupted = a.result;
  corrupted.edge_states[Edge{4, 5}] = corrupted.edge_states[Edge{3, 4}];
  auto violations = check_soundness(corrupted, t);
  REQUIRE(!violations.empty());
  bool found = false;
  for (const auto& v : violations) found |= v.edge == Edge{4, 5};
  CHECK(found);
}

TEST_CASE("randomized differential smoke suite") {
  std::mt19937 input_rng(97);
  std::uniform_int_distribution<int> val(-20, 20);
  int ran = 0;
  for (uint32_t seed = 1; seed <= 30; ++seed) {
    ProgramGen gen(seed);
    GenProgram gp = gen.generate();
    CAPTURE(seed);
    CAPTURE(gp.text);
    Analyzed a = run_analysis(gp.text);
    REQUIRE(a.result.stabilized);
    for (int trial = 0; trial < 2; ++trial) {
      ConcreteValuation inputs;
      for (const auto& r : gp.input_regs) inputs.regs[r] = val(input_rng);
      TraceResult t = run(a.prog, inputs, 200000);
      CHECK(!t.step_cap_hit);
      auto violations = check_soundness(a.result, t);
      for (const auto& v : violations) {
        CAPTURE(v.edge.from);
        CAPTURE(v.edge.to);
        CHECK(v.detail.empty());  // print the reason on failure
      }
      CHECK(violations.empty());
      // Concrete loop trip counts never exceed reported finite bounds.
      for (const auto& entry : a.rep.loops) {
        if (entry.max_bound.kind == Bound::Kind::Finite)
          CHECK(mpz_class(t.loop_max.at(entry.header)) <= entry.max_bound.value);
        if (entry.total_bound.kind == Bound::Kind::Finite)
          CHECK(mpz_class(t.loop_total.at(entry.header)) <=
                entry.total_bound.value);
      }
      ++ran;
    }
  }
  CHECK(ran == 60);
}
