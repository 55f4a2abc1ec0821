#include "polybound/fixpoint.hpp"
#include <cstdlib>
#include <cstdio>

#include <algorithm>
#include <cassert>
#include <deque>
#include <set>

namespace polybound {

bool states_equivalent(const AbstractState& a, const AbstractState& b) {
  if (a.is_bottom() || b.is_bottom()) return a.is_bottom() && b.is_bottom();
  if (a.regs().size() != b.regs().size() || a.mem().size() != b.mem().size())
    return false;

  std::map<VarId, VarId> subst;  // b's variables -> a's variables
  auto pair_vars = [&](VarId bv, VarId av) {
    auto it = subst.find(bv);
    if (it != subst.end()) return it->second == av;
    subst[bv] = av;
    return true;
  };

  for (const auto& [r, av] : a.regs()) {
    auto it = b.regs().find(r);
    if (it == b.regs().end()) return false;
    if (a.witness(r) != b.witness(r)) return false;
    if (!pair_vars(it->second, av)) return false;
  }
  // Addresses paired in ascending VarId order on both sides.
  {
    auto ia = a.mem().begin();
    auto ib = b.mem().begin();
    for (; ia != a.mem().end(); ++ia, ++ib) {
      if (!pair_vars(ib->first, ia->first)) return false;
      if (!pair_vars(ib->second, ia->second)) return false;
    }
  }
  // Injectivity of the pairing.
  std::set<VarId> targets;
  for (const auto& [from, to] : subst)
    if (!targets.insert(to).second) return false;
  for (VarId v : b.poly().vars())
    if (!subst.count(v)) return false;  // unpaired constrained variable

  try {
    Polyhedron renamed = rename_vars(b.poly(), subst);
    return includes(a.poly(), renamed) && includes(renamed, a.poly());
  } catch (const std::invalid_argument&) {
    return false;
  }
}

namespace {

struct Engine {
  const LoadedProgram& prog;
  FreshVarGen& fv;
  const EngineOptions& opt;
  const EdgeHook& hook;

  std::map<Edge, AbstractState> states;
  std::map<int, AbstractState> header_prev;
  std::map<int, AbstractState> header_entry_ctx;
  std::map<int, int> header_visits;
  std::map<int, int> header_widenings;
  std::vector<std::string> violations;

  const LoopInfo* loop_of_header(int node) const {
    for (const auto& l : prog.loops)
      if (l.header == node) return &l;
    return nullptr;
  }

  AbstractState apply_hook(const Edge& e, AbstractState s) {
    if (hook) s = hook(e, std::move(s), fv);
    if (opt.check_consistency && !is_consistent(s))
      violations.push_back("inconsistent state on edge " +
                           std::to_string(e.from) + "->" + std::to_string(e.to));
    return s;
  }

  AbstractState joined_input(int node) {
    AbstractState acc = AbstractState::bottom();
    for (const Edge& e : prog.cfg.pred[static_cast<size_t>(node)]) {
      auto it = states.find(e);
      assert(it != states.end());
      acc = join_states(acc, it->second, fv);
      if (opt.check_consistency && !is_consistent(acc))
        violations.push_back("inconsistent join at node " + std::to_string(node));
    }
    return acc;
  }

  AbstractState node_input(int node, bool descending) {
    AbstractState cand = joined_input(node);
    if (descending) return cand;
    const LoopInfo* l = loop_of_header(node);
    if (!l) return cand;

    // A new entry context means the loop is being re-analyzed in a changed
    // enclosing state; its widening sequence restarts so that variables the
    // loop itself leaves untouched (outer induction variables in particular)
    // are not widened away as if the loop grew them.
    AbstractState entry_ctx = AbstractState::bottom();
    for (const Edge& e : l->entry_edges)
      entry_ctx = join_states(entry_ctx, states.at(e), fv);
    auto ctx_it = header_entry_ctx.find(node);
    if (ctx_it == header_entry_ctx.end()) {
      header_entry_ctx.emplace(node, std::move(entry_ctx));
    } else if (!states_equivalent(ctx_it->second, entry_ctx)) {
      ctx_it->second = std::move(entry_ctx);
      header_visits[node] = 0;
      header_widenings[node] = 0;
      header_prev[node] = AbstractState::bottom();
    }

    int visits = ++header_visits[node];
    AbstractState& prev = header_prev.try_emplace(node, AbstractState::bottom())
                              .first->second;
    AbstractState input;
    if (visits <= opt.widening_delay) {
      input = join_states(prev, cand, fv);
    } else {
      WideningVariant variant =
          !opt.plain_widening && ++header_widenings[node] <= opt.widening_fallback
              ? WideningVariant::BoundRetaining
              : WideningVariant::Standard;
      input = widen_states(prev, cand, fv, variant);
    }
    if (std::getenv("PB_DEBUG_HEADERS") != nullptr) {
      fprintf(stderr, "--- header %d visit %d %s\nPREV:\n%s\nCAND:\n%s\nIN:\n%s\n",
              node, visits, visits <= opt.widening_delay ? "join" : "widen",
              prev.to_debug_string().c_str(), cand.to_debug_string().c_str(),
              input.to_debug_string().c_str());
    }
    if (states_equivalent(prev, input)) return prev;  // keep stable names
    prev = input;
    return input;
  }

  std::map<Edge, AbstractState> node_outputs(int node, const AbstractState& in) {
    const Instruction& ins = prog.instructions[static_cast<size_t>(node)];
    int n = prog.cfg.num_instructions;
    int fall = node + 1 == n ? prog.cfg.exit_node : node + 1;
    std::map<Edge, AbstractState> outs;
    if (is_branch(ins.op)) {
      BranchOut bo = update_branch(ins, in, fv);
      Edge taken{node, ins.target};
      Edge not_taken{node, fall};
      if (taken == not_taken) {
        outs[taken] = join_states(bo.taken, bo.not_taken, fv);
      } else {
        outs[taken] = std::move(bo.taken);
        outs[not_taken] = std::move(bo.not_taken);
      }
    } else if (ins.op == Opcode::Halt) {
      outs[Edge{node, prog.cfg.exit_node}] = in;
    } else {
      outs[Edge{node, fall}] = update(ins, in, fv);
    }
    for (auto& [e, s] : outs) s = apply_hook(e, std::move(s));
    return outs;
  }

  AbstractState final_state() {
    AbstractState acc = AbstractState::bottom();
    for (const Edge& e : prog.cfg.pred[static_cast<size_t>(prog.cfg.exit_node)])
      acc = join_states(acc, states.at(e), fv);
    return acc;
  }
};

}  // namespace

AnalysisResult analyze(const LoadedProgram& prog, FreshVarGen& fv,
                       const EngineOptions& opt, const AbstractState& initial,
                       const EdgeHook& hook) {
  Engine eng{prog, fv, opt, hook, {}, {}, {}, {}, {}, {}};
  for (const Edge& e : prog.cfg.edges) eng.states[e] = AbstractState::bottom();
  Edge entry{kEntryNode, 0};
  eng.states[entry] = eng.apply_hook(entry, initial);

  long cap = opt.max_iterations > 0
                 ? opt.max_iterations
                 : 10 * static_cast<long>(prog.cfg.edges.size());

  // Worklist over instruction nodes; membership-deduplicated.
  std::deque<int> queue;
  std::vector<bool> queued(static_cast<size_t>(prog.cfg.num_instructions), false);
  auto push = [&](int node) {
    if (node == prog.cfg.exit_node) return;
    if (queued[static_cast<size_t>(node)]) return;
    queued[static_cast<size_t>(node)] = true;
    queue.push_back(node);
  };
  auto pop = [&]() {
    int node;
    if (opt.order == EngineOptions::Order::Rpo) {
      auto best = queue.begin();
      for (auto it = queue.begin(); it != queue.end(); ++it)
        if (prog.dom.rpo_index[static_cast<size_t>(*it)] <
            prog.dom.rpo_index[static_cast<size_t>(*best)])
          best = it;
      node = *best;
      queue.erase(best);
    } else {
      node = queue.front();
      queue.pop_front();
    }
    queued[static_cast<size_t>(node)] = false;
    return node;
  };

  for (int node : prog.dom.rpo)
    if (node != prog.cfg.exit_node) push(node);

  AnalysisResult res;
  res.stabilized = true;
  while (!queue.empty()) {
    if (res.iterations >= cap) {
      res.stabilized = false;
      break;
    }
    int node = pop();
    ++res.iterations;
    AbstractState input = eng.node_input(node, false);
    for (auto& [e, s] : eng.node_outputs(node, input)) {
      AbstractState& stored = eng.states[e];
      if (!states_equivalent(stored, s)) {
        stored = std::move(s);
        push(e.to);
      }
    }
  }

  res.edge_states = eng.states;
  res.header_inputs = eng.header_prev;
  res.final_state = eng.final_state();
  res.consistency_violations = std::move(eng.violations);
  if (res.stabilized && opt.narrowing)
    return narrow(prog, fv, opt, hook, std::move(res));
  return res;
}

AnalysisResult narrow(const LoadedProgram& prog, FreshVarGen& fv,
                      const EngineOptions& opt, const EdgeHook& hook,
                      AnalysisResult result) {
  Engine eng{prog, fv, opt, hook, std::move(result.edge_states), {}, {}, {}, {}, {}};
  for (int node : prog.dom.rpo) {
    if (node == prog.cfg.exit_node) continue;
    ++result.iterations;
    AbstractState input = eng.node_input(node, true);
    for (auto& [e, s] : eng.node_outputs(node, input)) {
      AbstractState& stored = eng.states[e];
      if (!states_equivalent(stored, s)) stored = std::move(s);
    }
  }
  result.final_state = eng.final_state();
  result.edge_states = std::move(eng.states);
  for (auto& v : eng.violations) result.consistency_violations.push_back(v);
  return result;
}

}  // namespace polybound
