#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "polybound/poly.hpp"

namespace polybound {

enum class VarClass { Register, Address, Value, Other };

// Tag recorded when a register is bound by a comparison instruction: the
// variable holds the difference of the operands and branches consult the tag
// to decide what the zero test means. Top marks a join of conflicting tags;
// branching on it must not filter either side.
enum class WitnessKind { None, Eq, Lt, Top };

enum class AliasResult { Equivalent, Overlapping, Independent };

using RegName = std::string;

// Analysis state: a polyhedron, a register mapping m and an address mapping
// delta, plus the variable-class bookkeeping. Value semantics; operations
// return new states.
class AbstractState {
 public:
  static AbstractState top() { return AbstractState(); }
  static AbstractState bottom();
  bool is_bottom() const { return bottom_; }

  const Polyhedron& poly() const { return p_; }
  void set_poly(Polyhedron p);
  const std::map<RegName, VarId>& regs() const { return regs_; }
  const std::map<VarId, VarId>& mem() const { return mem_; }
  const std::map<VarId, VarClass>& classes() const { return classes_; }

  std::optional<VarId> reg(const RegName& r) const;
  std::optional<VarId> mem_value(VarId addr) const;
  VarClass class_of(VarId v) const;
  WitnessKind witness(const RegName& r) const;

  void bind_reg(const RegName& r, VarId v, WitnessKind w = WitnessKind::None);
  void bind_mem(VarId addr, VarId value);
  void unbind_mem(VarId addr);
  void set_class(VarId v, VarClass c);
  void prune_classes();  // drop class entries for vars in neither p, m nor delta

  std::vector<VarId> address_vars() const;  // ascending

  // Polyhedron block, then "m: r1->x1, ...", then "delta: x5->x6, ...".
  std::string to_debug_string() const;

 private:
  bool bottom_ = false;
  Polyhedron p_;
  std::map<RegName, VarId> regs_;
  std::map<VarId, VarId> mem_;
  std::map<VarId, VarClass> classes_;
  std::map<RegName, WitnessKind> witness_;
};

// Aliasing relation between two variables of p. On an empty polyhedron both
// "equal everywhere" and "equal nowhere" hold vacuously; Independent is
// returned so dead paths never trigger merges.
AliasResult alias_in_poly(const Polyhedron& p, VarId a, VarId b);
AliasResult alias(const AbstractState& s, VarId a, VarId b);

// Collapse the must-aliased address x2 into x1 (paper's Merge). Pre: x1 != x2,
// both Address-classed, alias(s, x1, x2) == Equivalent.
AbstractState merge(const AbstractState& s, VarId x1, VarId x2,
                    FreshVarGen& fv);

// Merge equivalent address pairs (lowest pair first) until consistent.
AbstractState unify(const AbstractState& s, FreshVarGen& fv);

// Project the polyhedron onto the variables bound in m or delta.
AbstractState gc(const AbstractState& s);

// The unique address variable equivalent to m(r), if any.
std::optional<VarId> lookup_equivalent_address(const AbstractState& s,
                                               const RegName& r);

// Definition 1: no two distinct address variables are equivalent.
bool is_consistent(const AbstractState& s);

}  // namespace polybound
