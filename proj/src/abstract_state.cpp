#include "polybound/abstract_state.hpp"

#include <cassert>
#include <set>
#include <sstream>
#include <stdexcept>

namespace polybound {

AbstractState AbstractState::bottom() {
  AbstractState s;
  s.bottom_ = true;
  s.p_ = Polyhedron::bottom();
  return s;
}

void AbstractState::set_poly(Polyhedron p) {
  p_ = std::move(p);
  bottom_ = p_.is_empty();
}

std::optional<VarId> AbstractState::reg(const RegName& r) const {
  auto it = regs_.find(r);
  if (it == regs_.end()) return std::nullopt;
  return it->second;
}

std::optional<VarId> AbstractState::mem_value(VarId addr) const {
  auto it = mem_.find(addr);
  if (it == mem_.end()) return std::nullopt;
  return it->second;
}

VarClass AbstractState::class_of(VarId v) const {
  auto it = classes_.find(v);
  return it == classes_.end() ? VarClass::Other : it->second;
}

WitnessKind AbstractState::witness(const RegName& r) const {
  auto it = witness_.find(r);
  return it == witness_.end() ? WitnessKind::None : it->second;
}

void AbstractState::bind_reg(const RegName& r, VarId v, WitnessKind w) {
  regs_[r] = v;
  classes_[v] = VarClass::Register;
  if (w == WitnessKind::None)
    witness_.erase(r);
  else
    witness_[r] = w;
}

void AbstractState::bind_mem(VarId addr, VarId value) {
  mem_[addr] = value;
  classes_[addr] = VarClass::Address;
  classes_[value] = VarClass::Value;
}

void AbstractState::unbind_mem(VarId addr) { mem_.erase(addr); }

void AbstractState::set_class(VarId v, VarClass c) { classes_[v] = c; }

void AbstractState::prune_classes() {
  std::set<VarId> used;
  for (const auto& [r, v] : regs_) used.insert(v);
  for (const auto& [a, v] : mem_) {
    used.insert(a);
    used.insert(v);
  }
  for (VarId v : p_.vars()) used.insert(v);
  for (auto it = classes_.begin(); it != classes_.end();) {
    if (!used.count(it->first))
      it = classes_.erase(it);
    else
      ++it;
  }
}

std::vector<VarId> AbstractState::address_vars() const {
  std::vector<VarId> out;
  for (const auto& [v, c] : classes_)
    if (c == VarClass::Address) out.push_back(v);
  return out;
}

std::string AbstractState::to_debug_string() const {
  std::ostringstream os;
  os << p_.to_debug_string();
  os << "\nm:";
  bool first = true;
  for (const auto& [r, v] : regs_) {
    os << (first ? " " : ", ") << r << "->" << to_string(v);
    first = false;
  }
  os << "\ndelta:";
  first = true;
  for (const auto& [a, v] : mem_) {
    os << (first ? " " : ", ") << to_string(a) << "->" << to_string(v);
    first = false;
  }
  return os.str();
}

AliasResult alias_in_poly(const Polyhedron& p, VarId a, VarId b) {
  if (a == b) return AliasResult::Equivalent;
  if (p.is_empty()) return AliasResult::Independent;
  if (p.entails(LinearConstraint::eq_vars(a, b))) return AliasResult::Equivalent;
  if (!p.mentions(a) || !p.mentions(b)) return AliasResult::Overlapping;
  Polyhedron meet =
      intersect(p, Polyhedron::of({LinearConstraint::eq_vars(a, b)}));
  return meet.is_empty() ? AliasResult::Independent : AliasResult::Overlapping;
}

AliasResult alias(const AbstractState& s, VarId a, VarId b) {
  return alias_in_poly(s.poly(), a, b);
}

AbstractState merge(const AbstractState& s, VarId x1, VarId x2,
                    FreshVarGen& fv) {
  if (x1 == x2 || s.class_of(x1) != VarClass::Address ||
      s.class_of(x2) != VarClass::Address)
    throw std::invalid_argument("merge: needs two distinct address variables");
  if (alias(s, x1, x2) != AliasResult::Equivalent)
    throw std::invalid_argument("merge: addresses are not equivalent");

  std::optional<VarId> y1 = s.mem_value(x1);
  std::optional<VarId> y2 = s.mem_value(x2);
  const Polyhedron& p = s.poly();

  Polyhedron p1 = p, p2 = p;
  if (y1 && y2) {
    VarId v1 = fv.fresh(), v2 = fv.fresh();
    p1 = rename_vars(p, {{*y2, v2}});
    p2 = rename_vars(p, {{*y1, v1}});
    // x1 = x2 holds everywhere, so substituting x2 by x1 is projection.
    p2 = project_out(p2, {x2});
    p2 = rename_vars(p2, {{*y2, *y1}});
  } else {
    p2 = project_out(p2, {x2});
  }
  VarId v3 = fv.fresh();

  AbstractState out = s;
  out.set_poly(hull(p1, p2));
  if (y2 && !y1) out.bind_mem(x1, *y2);  // adopt the only record for the cell
  out.bind_mem(x2, v3);
  out.prune_classes();
  return out;
}

AbstractState unify(const AbstractState& s, FreshVarGen& fv) {
  if (s.is_bottom()) return s;
  AbstractState cur = s;
  size_t cap = 1;
  {
    size_t n = cur.address_vars().size();
    cap += n * n;
  }
  for (size_t round = 0; round < cap; ++round) {
    std::vector<VarId> addrs = cur.address_vars();
    bool merged = false;
    for (size_t i = 0; i < addrs.size() && !merged; ++i) {
      for (size_t j = i + 1; j < addrs.size() && !merged; ++j) {
        if (alias(cur, addrs[i], addrs[j]) == AliasResult::Equivalent) {
          cur = merge(cur, addrs[i], addrs[j], fv);
          merged = true;
        }
      }
    }
    if (!merged) return cur;
  }
  assert(false && "unify did not converge");
  return cur;
}

AbstractState gc(const AbstractState& s) {
  if (s.is_bottom()) return s;
  std::set<VarId> keep;
  for (const auto& [r, v] : s.regs()) keep.insert(v);
  for (const auto& [a, v] : s.mem()) {
    keep.insert(a);
    keep.insert(v);
  }
  AbstractState out = s;
  out.set_poly(project(s.poly(), keep));
  out.prune_classes();
  return out;
}

std::optional<VarId> lookup_equivalent_address(const AbstractState& s,
                                               const RegName& r) {
  std::optional<VarId> v = s.reg(r);
  if (!v || s.is_bottom()) return std::nullopt;
  std::optional<VarId> found;
  for (VarId a : s.address_vars()) {
    if (alias(s, a, *v) == AliasResult::Equivalent) {
      // Consistency makes the equivalent address unique.
      assert(!found && "two equivalent addresses: state inconsistent");
      found = a;
#ifdef NDEBUG
      break;
#endif
    }
  }
  return found;
}

bool is_consistent(const AbstractState& s) {
  if (s.is_bottom()) return true;
  std::vector<VarId> addrs = s.address_vars();
  for (size_t i = 0; i < addrs.size(); ++i)
    for (size_t j = i + 1; j < addrs.size(); ++j)
      if (alias(s, addrs[i], addrs[j]) == AliasResult::Equivalent) return false;
  return true;
}

}  // namespace polybound
