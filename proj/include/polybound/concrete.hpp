#pragma once

#include <gmpxx.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polybound/fixpoint.hpp"
#include "polybound/loopbound.hpp"
#include "polybound/program.hpp"

namespace polybound {

// One concrete machine configuration: register and memory valuations are
// partial (reading an undefined location stops the trace). Virtual loop
// counters mirror the analysis convention (-1 before first entry, reset to 0
// on entry edges, +1 on back edges) so soundness can be checked for them too.
struct ConcreteValuation {
  std::map<RegName, mpz_class> regs;
  std::map<mpz_class, mpz_class> mem;

  auto operator<=>(const ConcreteValuation&) const = default;
};

struct TraceResult {
  // Valuations observed while traversing each edge (deduplicated).
  std::map<Edge, std::vector<ConcreteValuation>> edge_states;
  bool step_cap_hit = false;
  bool stopped_on_undefined = false;
  std::string diagnostic;
  long steps = 0;

  // Per loop header: back-edge traversals since the last entry (max over the
  // run) and over the whole run.
  std::map<int, long> loop_max;
  std::map<int, long> loop_total;
};

// Execute one trace from the given input registers. Branches consult the
// producing instruction's witness tag: plain and EQ values take BNZ when
// nonzero, LT witnesses take BNZ when negative.
TraceResult run(const LoadedProgram& prog, const ConcreteValuation& inputs,
                long step_cap);

struct SoundnessViolation {
  Edge edge;
  std::string detail;
};

// Theorem-1 check by substitution: every concrete valuation recorded on an
// edge must satisfy the edge's polyhedron once registers (machine and
// virtual) are substituted through m and memory cells through delta for
// addresses the polyhedron pins to a single value.
std::vector<SoundnessViolation> check_soundness(const AnalysisResult& abs,
                                                const TraceResult& conc);

}  // namespace polybound
