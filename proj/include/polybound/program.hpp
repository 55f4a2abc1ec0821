#pragma once

#include <compare>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace polybound {

using RegName = std::string;

enum class Opcode {
  Add,
  Sub,
  Mul,
  Eq,
  Lt,
  And,
  Or,
  Xor,
  Loadi,
  Load,
  Store,
  Bnz,
  Bz,
  Halt
};

bool is_binop(Opcode op);
bool is_branch(Opcode op);
std::string opcode_name(Opcode op);

struct Instruction {
  int index = 0;
  Opcode op = Opcode::Halt;
  RegName rd;          // destination (OP/LOADI/LOAD); address register (STORE)
  RegName ra;          // first source; value register (STORE); condition (BOP)
  RegName rb;          // second source (OP only)
  long long imm = 0;   // LOADI constant
  int target = -1;     // resolved branch target (0-based instruction index)
  int target_def = -1; // LOADI that resolved a register-form target, or -1
  std::string label;   // label attached to this instruction, if any
};

struct ParseError : std::runtime_error {
  int line;
  ParseError(int line_no, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line_no) + ": " + msg),
        line(line_no) {}
};

struct CfgError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<Instruction> parse(const std::string& text);

struct Edge {
  int from = 0;
  int to = 0;
  auto operator<=>(const Edge&) const = default;
};

inline constexpr int kEntryNode = -1;

// Instruction graph. Nodes are instruction indices; a virtual exit node
// (id == instruction count) collects HALT and fall-off-the-end, and a
// virtual entry edge (kEntryNode, 0) carries the initial state.
struct CFG {
  int num_instructions = 0;
  int exit_node = 0;
  std::vector<Edge> edges;                // sorted, includes the entry edge
  std::vector<std::vector<Edge>> succ;    // per instruction node
  std::vector<std::vector<Edge>> pred;    // per node including exit

  std::vector<Edge> in_edges(int node) const;
  const std::vector<Edge>& out_edges(int node) const;
};

CFG build_cfg(const std::vector<Instruction>& prog);

struct DomInfo {
  // dom[n] = set of nodes dominating n (including n); indexed 0..exit_node.
  std::vector<std::set<int>> dom;
  std::vector<int> rpo;        // reverse postorder over reachable nodes
  std::vector<int> rpo_index;  // node -> position in rpo

  bool dominates(int a, int b) const { return dom[b].count(a) > 0; }
};

DomInfo dominators(const CFG& cfg);

struct LoopInfo {
  int header = 0;
  std::set<Edge> back_edges;
  std::set<Edge> entry_edges;
  std::set<Edge> exit_edges;  // edges from a body node to a non-body node
  std::set<int> body;
  int parent = -1;  // header of the immediately enclosing loop, or -1
  std::string label;
};

// One LoopInfo per header, sorted by header index. Throws CfgError on
// irreducible graphs.
std::vector<LoopInfo> find_loops(const CFG& cfg, const DomInfo& dom);

struct LoadedProgram {
  std::vector<Instruction> instructions;
  CFG cfg;
  DomInfo dom;
  std::vector<LoopInfo> loops;
};

LoadedProgram load_program(const std::string& text);

}  // namespace polybound
