#include "polybound/concrete.hpp"

#include <cassert>
#include <set>
#include <sstream>

namespace polybound {

namespace {

struct Machine {
  const LoadedProgram& prog;
  ConcreteValuation v;
  std::map<RegName, WitnessKind> tags;
  TraceResult out;

  std::optional<mpz_class> read(const RegName& r) {
    auto it = v.regs.find(r);
    if (it == v.regs.end()) {
      out.stopped_on_undefined = true;
      out.diagnostic = "read of undefined register " + r;
      return std::nullopt;
    }
    return it->second;
  }

  void write(const RegName& r, mpz_class value, WitnessKind tag) {
    v.regs[r] = std::move(value);
    tags[r] = tag;
  }

  // Mirrors the loop-bound hooks on every traversed edge.
  void traverse(const Edge& e) {
    for (const LoopInfo& l : prog.loops) {
      if (l.back_edges.count(e)) {
        mpz_class& rm = v.regs[rm_name(l.header)];
        rm += 1;
        long count = static_cast<long>(rm.get_si());
        long& mx = out.loop_max[l.header];
        if (count > mx) mx = count;
        out.loop_total[l.header] += 1;
        if (l.parent >= 0) v.regs[rt_name(l.header)] += 1;
      }
    }
    for (const LoopInfo& l : prog.loops) {
      if (l.entry_edges.count(e)) v.regs[rm_name(l.header)] = 0;
    }
    out.edge_states[e].push_back(v);
  }
};

}  // namespace

TraceResult run(const LoadedProgram& prog, const ConcreteValuation& inputs,
                long step_cap) {
  Machine m{prog, inputs, {}, {}};
  for (const LoopInfo& l : prog.loops) {
    m.v.regs[rm_name(l.header)] = -1;
    m.v.regs[rt_name(l.header)] = 0;
    m.out.loop_max[l.header] = 0;
    m.out.loop_total[l.header] = 0;
  }
  m.traverse(Edge{kEntryNode, 0});

  int pc = 0;
  while (!m.out.stopped_on_undefined) {
    if (m.out.steps >= step_cap) {
      m.out.step_cap_hit = true;
      break;
    }
    ++m.out.steps;
    const Instruction& ins = prog.instructions[static_cast<size_t>(pc)];
    int fall = pc + 1 == prog.cfg.num_instructions ? prog.cfg.exit_node : pc + 1;
    int next = fall;

    switch (ins.op) {
      case Opcode::Loadi:
        m.write(ins.rd, mpz_class(static_cast<long>(ins.imm)),
                WitnessKind::None);
        break;
      case Opcode::Load: {
        auto addr = m.read(ins.ra);
        if (!addr) break;
        auto cell = m.v.mem.find(*addr);
        if (cell == m.v.mem.end()) {
          m.out.stopped_on_undefined = true;
          m.out.diagnostic = "read of undefined memory at " + addr->get_str();
          break;
        }
        m.write(ins.rd, cell->second, WitnessKind::None);
        break;
      }
      case Opcode::Store: {
        auto addr = m.read(ins.rd);
        auto value = m.read(ins.ra);
        if (!addr || !value) break;
        m.v.mem[*addr] = *value;
        break;
      }
      case Opcode::Bnz:
      case Opcode::Bz: {
        auto cond = m.read(ins.ra);
        if (!cond) break;
        WitnessKind tag = m.tags.count(ins.ra) ? m.tags[ins.ra]
                                               : WitnessKind::None;
        bool predicate =
            tag == WitnessKind::Lt ? *cond < 0 : *cond != 0;
        bool taken = ins.op == Opcode::Bnz ? predicate : !predicate;
        next = taken ? ins.target : fall;
        break;
      }
      case Opcode::Halt:
        next = prog.cfg.exit_node;
        break;
      default: {
        assert(is_binop(ins.op));
        auto a = m.read(ins.ra);
        auto b = m.read(ins.rb);
        if (!a || !b) break;
        mpz_class r;
        WitnessKind tag = WitnessKind::None;
        switch (ins.op) {
          case Opcode::Add: r = *a + *b; break;
          case Opcode::Sub: r = *a - *b; break;
          case Opcode::Mul: r = *a * *b; break;
          case Opcode::Eq:
            r = *a - *b;
            tag = WitnessKind::Eq;
            break;
          case Opcode::Lt:
            r = *a - *b;
            tag = WitnessKind::Lt;
            break;
          case Opcode::And: r = *a & *b; break;
          case Opcode::Or: r = *a | *b; break;
          default: r = *a ^ *b; break;
        }
        m.write(ins.rd, std::move(r), tag);
        break;
      }
    }
    if (m.out.stopped_on_undefined || m.out.step_cap_hit) break;

    m.traverse(Edge{pc, next});
    if (next == prog.cfg.exit_node) break;
    pc = next;
  }

  // Set semantics per edge.
  for (auto& [e, vals] : m.out.edge_states) {
    std::set<ConcreteValuation> uniq(vals.begin(), vals.end());
    vals.assign(uniq.begin(), uniq.end());
  }
  return m.out;
}

std::vector<SoundnessViolation> check_soundness(const AnalysisResult& abs,
                                                const TraceResult& conc) {
  std::vector<SoundnessViolation> out;
  for (const auto& [edge, valuations] : conc.edge_states) {
    auto it = abs.edge_states.find(edge);
    if (it == abs.edge_states.end()) {
      out.push_back({edge, "edge missing from the abstract result"});
      continue;
    }
    const AbstractState& s = it->second;
    for (const ConcreteValuation& v : valuations) {
      if (s.is_bottom()) {
        out.push_back({edge, "concrete execution reaches an edge the "
                             "analysis claims unreachable"});
        continue;
      }
      std::vector<LinearConstraint> subs;
      for (const auto& [r, var] : s.regs()) {
        auto cv = v.regs.find(r);
        if (cv != v.regs.end())
          subs.push_back(LinearConstraint::eq(var, mpq_class(cv->second)));
      }
      Polyhedron pinned = intersect(s.poly(), Polyhedron::of(subs));
      if (pinned.is_empty()) {
        out.push_back({edge, "register valuation violates the polyhedron"});
        continue;
      }
      // Memory: substitute cells whose address variable is pinned.
      std::vector<LinearConstraint> mem_subs;
      for (const auto& [a, val_var] : s.mem()) {
        Extremum hi = pinned.maximize(a);
        Extremum lo = pinned.minimize(a);
        if (!hi.is_finite() || !lo.is_finite() || hi.value != lo.value)
          continue;
        if (hi.value.get_den() != 1) continue;  // no integer cell matches
        auto cell = v.mem.find(hi.value.get_num());
        if (cell == v.mem.end()) continue;
        mem_subs.push_back(
            LinearConstraint::eq(val_var, mpq_class(cell->second)));
      }
      if (!mem_subs.empty() &&
          intersect(pinned, Polyhedron::of(mem_subs)).is_empty()) {
        out.push_back({edge, "memory valuation violates the polyhedron"});
      }
    }
  }
  return out;
}

}  // namespace polybound
