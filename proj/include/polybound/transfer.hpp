#pragma once

#include "polybound/abstract_state.hpp"
#include "polybound/program.hpp"

namespace polybound {

// Abstract transformer for a non-branch instruction. The result is unified
// and garbage collected.
AbstractState update(const Instruction& ins, const AbstractState& in,
                     FreshVarGen& fv);

struct BranchOut {
  AbstractState taken;
  AbstractState not_taken;
};

// Filtering per the condition register's witness tag. BNZ takes the branch
// when the recorded predicate is true, BZ when it is false; only linearly
// expressible conditions add constraints.
BranchOut update_branch(const Instruction& ins, const AbstractState& in,
                        FreshVarGen& fv);

// Join of two edge states: address/register unification, convex hull,
// fresh relaxation of one-sided or mismatched bindings, then unify and gc.
// Bottom is the neutral element.
AbstractState join_states(const AbstractState& s1, const AbstractState& s2,
                          FreshVarGen& fv);

// Same procedure with widening in place of the hull.
AbstractState widen_states(const AbstractState& s1, const AbstractState& s2,
                           FreshVarGen& fv,
                           WideningVariant variant = WideningVariant::BoundRetaining);

}  // namespace polybound
