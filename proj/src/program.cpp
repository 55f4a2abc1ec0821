#include "polybound/program.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <optional>

namespace polybound {

bool is_binop(Opcode op) {
  switch (op) {
    case Opcode::Add:
    case Opcode::Sub:
    case Opcode::Mul:
    case Opcode::Eq:
    case Opcode::Lt:
    case Opcode::And:
    case Opcode::Or:
    case Opcode::Xor:
      return true;
    default:
      return false;
  }
}

bool is_branch(Opcode op) { return op == Opcode::Bnz || op == Opcode::Bz; }

std::string opcode_name(Opcode op) {
  switch (op) {
    case Opcode::Add: return "ADD";
    case Opcode::Sub: return "SUB";
    case Opcode::Mul: return "MUL";
    case Opcode::Eq: return "EQ";
    case Opcode::Lt: return "LT";
    case Opcode::And: return "AND";
    case Opcode::Or: return "OR";
    case Opcode::Xor: return "XOR";
    case Opcode::Loadi: return "LOADI";
    case Opcode::Load: return "LOAD";
    case Opcode::Store: return "STORE";
    case Opcode::Bnz: return "BNZ";
    case Opcode::Bz: return "BZ";
    case Opcode::Halt: return "HALT";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

bool valid_label(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  return true;
}

std::optional<RegName> parse_reg(const std::string& tok) {
  std::string t = lower(tok);
  if (t.size() < 2 || t.size() > 3 || t[0] != 'r') return std::nullopt;
  for (size_t i = 1; i < t.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(t[i]))) return std::nullopt;
  int n = std::stoi(t.substr(1));
  if (n < 0 || n > 31) return std::nullopt;
  if (t != "r" + std::to_string(n)) return std::nullopt;  // no leading zeros
  return t;
}

std::optional<long long> parse_int(const std::string& tok) {
  if (tok.empty()) return std::nullopt;
  size_t i = tok[0] == '-' || tok[0] == '+' ? 1 : 0;
  if (i == tok.size()) return std::nullopt;
  for (size_t k = i; k < tok.size(); ++k)
    if (!std::isdigit(static_cast<unsigned char>(tok[k]))) return std::nullopt;
  try {
    return std::stoll(tok);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::vector<std::string> split_operands(const std::string& s, int line_no) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  size_t start = 0;
  while (true) {
    size_t comma = s.find(',', start);
    std::string part = trim(comma == std::string::npos
                                ? s.substr(start)
                                : s.substr(start, comma - start));
    if (part.empty()) throw ParseError(line_no, "empty operand");
    out.push_back(part);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

struct PendingBranch {
  int instr;        // instruction index
  int line;         // source line for diagnostics
  std::string arg;  // "@label" or register name
};

}  // namespace

std::vector<Instruction> parse(const std::string& text) {
  std::vector<Instruction> prog;
  std::map<std::string, int> labels;  // label -> instruction index
  std::vector<std::string> pending_labels;
  std::vector<PendingBranch> branches;

  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    std::string raw = nl == std::string::npos ? text.substr(pos)
                                              : text.substr(pos, nl - pos);
    pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    std::string line = raw;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line[0] == '@') {
      if (line.back() != ':')
        throw ParseError(line_no, "label line must end with ':'");
      std::string name = line.substr(1, line.size() - 2);
      if (!valid_label(name)) throw ParseError(line_no, "malformed label");
      if (labels.count(name))
        throw ParseError(line_no, "duplicate label @" + name);
      labels[name] = static_cast<int>(prog.size());
      pending_labels.push_back(name);
      continue;
    }

    size_t sp = line.find_first_of(" \t");
    std::string opword = upper(sp == std::string::npos ? line : line.substr(0, sp));
    std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    std::vector<std::string> ops = split_operands(rest, line_no);

    Instruction ins;
    ins.index = static_cast<int>(prog.size());
    if (!pending_labels.empty()) {
      ins.label = pending_labels.front();
      pending_labels.clear();
    }

    auto need = [&](size_t n) {
      if (ops.size() != n)
        throw ParseError(line_no, opword + " expects " + std::to_string(n) +
                                      " operand(s)");
    };
    auto reg = [&](const std::string& tok) {
      auto r = parse_reg(tok);
      if (!r) throw ParseError(line_no, "malformed register '" + tok + "'");
      return *r;
    };

    static const std::map<std::string, Opcode> kBinops = {
        {"ADD", Opcode::Add}, {"SUB", Opcode::Sub}, {"MUL", Opcode::Mul},
        {"EQ", Opcode::Eq},   {"LT", Opcode::Lt},   {"AND", Opcode::And},
        {"OR", Opcode::Or},   {"XOR", Opcode::Xor}};

    if (auto it = kBinops.find(opword); it != kBinops.end()) {
      need(3);
      ins.op = it->second;
      ins.rd = reg(ops[0]);
      ins.ra = reg(ops[1]);
      ins.rb = reg(ops[2]);
    } else if (opword == "LOADI") {
      need(2);
      ins.op = Opcode::Loadi;
      ins.rd = reg(ops[0]);
      auto v = parse_int(ops[1]);
      if (!v) throw ParseError(line_no, "malformed constant '" + ops[1] + "'");
      ins.imm = *v;
    } else if (opword == "LOAD") {
      need(2);
      ins.op = Opcode::Load;
      ins.rd = reg(ops[0]);
      ins.ra = reg(ops[1]);
    } else if (opword == "STORE") {
      need(2);
      ins.op = Opcode::Store;
      ins.rd = reg(ops[0]);  // address
      ins.ra = reg(ops[1]);  // value
    } else if (opword == "BNZ" || opword == "BZ") {
      need(2);
      ins.op = opword == "BNZ" ? Opcode::Bnz : Opcode::Bz;
      ins.ra = reg(ops[1]);  // condition register
      branches.push_back({ins.index, line_no, ops[0]});
    } else if (opword == "HALT") {
      need(0);
      ins.op = Opcode::Halt;
    } else {
      throw ParseError(line_no, "unknown opcode '" + opword + "'");
    }
    prog.push_back(std::move(ins));
  }

  if (prog.empty()) throw ParseError(line_no, "no instructions");
  if (!pending_labels.empty())
    throw ParseError(line_no, "label @" + pending_labels.front() +
                                  " does not precede an instruction");

  int n = static_cast<int>(prog.size());
  for (const auto& b : branches) {
    Instruction& ins = prog[b.instr];
    if (b.arg[0] == '@') {
      std::string name = b.arg.substr(1);
      auto it = labels.find(name);
      if (it == labels.end())
        throw ParseError(b.line, "unknown label @" + name);
      ins.target = it->second;
    } else {
      // Paper form: the target sits in a register. Resolve it by scanning
      // backward along the straight-line path for a dominating LOADI; any
      // intervening label or other write to the register rejects.
      auto rt = parse_reg(b.arg);
      if (!rt) throw ParseError(b.line, "malformed branch target '" + b.arg + "'");
      std::optional<long long> value;
      for (int i = b.instr - 1; i >= 0; --i) {
        const Instruction& prev = prog[i];
        bool writes = (prev.op == Opcode::Loadi || is_binop(prev.op) ||
                       prev.op == Opcode::Load) &&
                      prev.rd == *rt;
        if (writes) {
          if (prev.op == Opcode::Loadi) {
            value = prev.imm;
            ins.target_def = i;
          }
          break;
        }
        if (!prev.label.empty()) break;  // potential join point
      }
      if (!value)
        throw ParseError(b.line, "cannot resolve branch target register '" +
                                     *rt + "' to a unique constant");
      // Register-held targets use the paper's 1-based instruction numbers.
      if (*value < 1 || *value > n)
        throw ParseError(b.line, "branch target " + std::to_string(*value) +
                                     " out of range");
      ins.target = static_cast<int>(*value) - 1;
    }
  }
  return prog;
}

std::vector<Edge> CFG::in_edges(int node) const {
  return pred[static_cast<size_t>(node)];
}

const std::vector<Edge>& CFG::out_edges(int node) const {
  return succ[static_cast<size_t>(node)];
}

CFG build_cfg(const std::vector<Instruction>& prog) {
  CFG cfg;
  cfg.num_instructions = static_cast<int>(prog.size());
  cfg.exit_node = cfg.num_instructions;
  cfg.succ.resize(prog.size());
  cfg.pred.resize(prog.size() + 1);

  auto add_edge = [&](int from, int to) {
    Edge e{from, to};
    cfg.edges.push_back(e);
    if (from >= 0) cfg.succ[static_cast<size_t>(from)].push_back(e);
    cfg.pred[static_cast<size_t>(to)].push_back(e);
  };

  add_edge(kEntryNode, 0);
  for (const auto& ins : prog) {
    int fall = ins.index + 1 == cfg.num_instructions ? cfg.exit_node
                                                     : ins.index + 1;
    switch (ins.op) {
      case Opcode::Halt:
        add_edge(ins.index, cfg.exit_node);
        break;
      case Opcode::Bnz:
      case Opcode::Bz:
        if (ins.target < 0 || ins.target >= cfg.num_instructions)
          throw CfgError("branch target out of range");
        add_edge(ins.index, ins.target);   // taken
        if (ins.target != fall) add_edge(ins.index, fall);  // not taken
        break;
      default:
        add_edge(ins.index, fall);
        break;
    }
  }
  std::sort(cfg.edges.begin(), cfg.edges.end());

  // Every instruction must be reachable from the entry.
  std::vector<bool> seen(prog.size() + 1, false);
  std::vector<int> stack = {0};
  seen[0] = true;
  while (!stack.empty()) {
    int n = stack.back();
    stack.pop_back();
    if (n == cfg.exit_node) continue;
    for (const Edge& e : cfg.succ[static_cast<size_t>(n)]) {
      if (!seen[static_cast<size_t>(e.to)]) {
        seen[static_cast<size_t>(e.to)] = true;
        stack.push_back(e.to);
      }
    }
  }
  for (int i = 0; i < cfg.num_instructions; ++i)
    if (!seen[static_cast<size_t>(i)])
      throw CfgError("unreachable instruction at index " + std::to_string(i));
  return cfg;
}

DomInfo dominators(const CFG& cfg) {
  int n = cfg.exit_node + 1;
  DomInfo info;

  // Reverse postorder from the entry.
  static const std::vector<Edge> kNoEdges;
  std::vector<bool> visited(static_cast<size_t>(n), false);
  std::vector<int> postorder;
  std::vector<std::pair<int, size_t>> stack;
  stack.emplace_back(0, 0);
  visited[0] = true;
  while (!stack.empty()) {
    int node = stack.back().first;
    const auto& succs = node == cfg.exit_node
                            ? kNoEdges
                            : cfg.succ[static_cast<size_t>(node)];
    if (stack.back().second < succs.size()) {
      int next = succs[stack.back().second].to;
      ++stack.back().second;
      if (!visited[static_cast<size_t>(next)]) {
        visited[static_cast<size_t>(next)] = true;
        stack.emplace_back(next, 0);
      }
    } else {
      postorder.push_back(node);
      stack.pop_back();
    }
  }
  info.rpo.assign(postorder.rbegin(), postorder.rend());
  info.rpo_index.assign(static_cast<size_t>(n), -1);
  for (size_t i = 0; i < info.rpo.size(); ++i)
    info.rpo_index[static_cast<size_t>(info.rpo[i])] = static_cast<int>(i);

  std::set<int> all;
  for (int i = 0; i < n; ++i) all.insert(i);
  info.dom.assign(static_cast<size_t>(n), all);
  info.dom[0] = {0};
  bool changed = true;
  while (changed) {
    changed = false;
    for (int node : info.rpo) {
      if (node == 0) continue;
      std::set<int> meet = all;
      for (const Edge& e : cfg.pred[static_cast<size_t>(node)]) {
        if (e.from == kEntryNode) continue;  // only node 0, handled above
        std::set<int> inter;
        std::set_intersection(meet.begin(), meet.end(),
                              info.dom[static_cast<size_t>(e.from)].begin(),
                              info.dom[static_cast<size_t>(e.from)].end(),
                              std::inserter(inter, inter.begin()));
        meet = std::move(inter);
      }
      meet.insert(node);
      if (meet != info.dom[static_cast<size_t>(node)]) {
        info.dom[static_cast<size_t>(node)] = std::move(meet);
        changed = true;
      }
    }
  }
  return info;
}

std::vector<LoopInfo> find_loops(const CFG& cfg, const DomInfo& dom) {
  std::map<int, LoopInfo> loops;  // keyed by header

  for (const Edge& e : cfg.edges) {
    if (e.from == kEntryNode || e.from == cfg.exit_node) continue;
    bool retreating = dom.rpo_index[static_cast<size_t>(e.to)] <=
                      dom.rpo_index[static_cast<size_t>(e.from)];
    if (!retreating) continue;
    if (!dom.dominates(e.to, e.from))
      throw CfgError("irreducible control flow: edge " +
                     std::to_string(e.from) + "->" + std::to_string(e.to) +
                     " retreats to a non-dominator");
    LoopInfo& l = loops.try_emplace(e.to).first->second;
    l.header = e.to;
    l.back_edges.insert(e);
    // Natural loop: backward closure of the back-edge source to the header.
    l.body.insert(e.to);
    std::vector<int> stack;
    if (!l.body.count(e.from)) {
      l.body.insert(e.from);
      stack.push_back(e.from);
    }
    while (!stack.empty()) {
      int n = stack.back();
      stack.pop_back();
      for (const Edge& in : cfg.pred[static_cast<size_t>(n)]) {
        if (in.from == kEntryNode) continue;
        if (!l.body.count(in.from)) {
          l.body.insert(in.from);
          stack.push_back(in.from);
        }
      }
    }
  }

  std::vector<LoopInfo> out;
  for (auto& [h, l] : loops) {
    for (const Edge& e : cfg.pred[static_cast<size_t>(h)])
      if (!l.back_edges.count(e)) l.entry_edges.insert(e);
    for (const Edge& e : cfg.edges) {
      if (e.from == kEntryNode) continue;
      if (l.body.count(e.from) && !l.body.count(e.to)) l.exit_edges.insert(e);
    }
    out.push_back(std::move(l));
  }

  // Nesting: parent is the smallest strictly containing loop.
  for (auto& l : out) {
    size_t best = SIZE_MAX;
    for (const auto& other : out) {
      if (other.header == l.header) continue;
      if (!other.body.count(l.header)) continue;
      bool contains = std::includes(other.body.begin(), other.body.end(),
                                    l.body.begin(), l.body.end());
      if (contains && other.body.size() < best) {
        best = other.body.size();
        l.parent = other.header;
      }
    }
  }
  return out;
}

LoadedProgram load_program(const std::string& text) {
  LoadedProgram lp;
  lp.instructions = parse(text);
  lp.cfg = build_cfg(lp.instructions);
  lp.dom = dominators(lp.cfg);

  // The backward scan in the parser is only a candidate search; the LOADI
  // defining a register-held branch target must actually dominate the branch.
  for (const auto& ins : lp.instructions) {
    if (ins.target_def >= 0 && !lp.dom.dominates(ins.target_def, ins.index))
      throw CfgError("branch target register definition at index " +
                     std::to_string(ins.target_def) +
                     " does not dominate the branch at index " +
                     std::to_string(ins.index));
  }

  lp.loops = find_loops(lp.cfg, lp.dom);
  for (auto& l : lp.loops)
    l.label = lp.instructions[static_cast<size_t>(l.header)].label;
  return lp;
}

}  // namespace polybound
