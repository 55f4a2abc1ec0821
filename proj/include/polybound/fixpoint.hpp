#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "polybound/transfer.hpp"

namespace polybound {

struct EngineOptions {
  int widening_delay = 2;  // header visits joined before widening starts
  bool narrowing = true;   // one descending pass after stabilization
  long max_iterations = 0; // node evaluations; 0 means 10 * |E|
  enum class Order { Rpo, Fifo } order = Order::Rpo;
  bool check_consistency = false;  // record Definition-1 violations per edge
  // Bound-retaining widening refinement; plain H79 when disabled. The engine
  // falls back to plain widening after `widening_fallback` applications at
  // one header within one entry context, which keeps termination
  // unconditional.
  bool plain_widening = false;
  int widening_fallback = 16;
};

// Applied to every edge state as it is produced; loop-bound instrumentation
// plugs in here. May be empty.
using EdgeHook =
    std::function<AbstractState(const Edge&, AbstractState, FreshVarGen&)>;

struct AnalysisResult {
  std::map<Edge, AbstractState> edge_states;
  std::map<int, AbstractState> header_inputs;  // last input per loop header
  long iterations = 0;
  bool stabilized = false;
  AbstractState final_state;  // join over the exit node's in-edges
  std::vector<std::string> consistency_violations;
};

// Edge-state fixpoint: reverse-postorder worklist, join at merge points,
// widening at loop headers after the configured delay, optional descending
// pass. The entry edge carries `initial` (after the hook).
AnalysisResult analyze(const LoadedProgram& prog, FreshVarGen& fv,
                       const EngineOptions& opt, const AbstractState& initial,
                       const EdgeHook& hook);

// One descending pass over a stabilized result: headers recompute their
// input with join instead of widening. Sound; only recovers precision.
AnalysisResult narrow(const LoadedProgram& prog, FreshVarGen& fv,
                      const EngineOptions& opt, const EdgeHook& hook,
                      AnalysisResult result);

// Equality up to fresh-variable renaming: identical mapping domains, bound
// locations paired in canonical order, then mutual polyhedron inclusion.
bool states_equivalent(const AbstractState& a, const AbstractState& b);

}  // namespace polybound
