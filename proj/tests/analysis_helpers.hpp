#pragma once

// Shared test plumbing: load a program, run the full analysis with loop-bound
// hooks, and collect the report.

#include <string>

#include "polybound/loopbound.hpp"

namespace polybound::testing {

struct Analyzed {
  LoadedProgram prog;
  AnalysisResult result;
  BoundReport rep;
};

inline Analyzed run_analysis(const std::string& text, EngineOptions opt = {}) {
  Analyzed a{load_program(text), {}, {}};
  FreshVarGen fv;
  LoopHooks hooks(a.prog);
  AbstractState init = loop_initial_state(a.prog.loops, fv);
  EdgeHook hook = [&hooks](const Edge& e, AbstractState s, FreshVarGen& gen) {
    return hooks(e, std::move(s), gen);
  };
  a.result = analyze(a.prog, fv, opt, init, hook);
  a.rep = report(a.result, a.prog, hooks.relations());
  return a;
}

inline const LoopBoundEntry& loop_named(const BoundReport& rep,
                                        const std::string& label) {
  for (const auto& l : rep.loops)
    if (l.label == label) return l;
  throw std::out_of_range("no loop labeled " + label);
}

}  // namespace polybound::testing
