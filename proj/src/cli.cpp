#include "polybound/cli.hpp"

#include <chrono>
#include <fstream>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "polybound/loopbound.hpp"

namespace polybound {

namespace {

std::string edge_name(const Edge& e, const CFG& cfg) {
  auto node = [&](int n) {
    if (n == kEntryNode) return std::string("entry");
    if (n == cfg.exit_node) return std::string("exit");
    return std::to_string(n);
  };
  return "(" + node(e.from) + "," + node(e.to) + ")";
}

std::string relation_string(const RelationCoeffs& r) {
  std::ostringstream os;
  os << "(" << r.a.get_str() << "," << r.b.get_str() << "," << r.c.get_str()
     << ")";
  return os.str();
}

}  // namespace

int run_on_text(const std::string& text, const RunConfig& config,
                std::ostream& out, std::ostream& err) {
  LoadedProgram prog;
  try {
    prog = load_program(text);
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << "\n";
    return 2;
  } catch (const CfgError& e) {
    err << "control flow error: " << e.what() << "\n";
    return 3;
  }

  EngineOptions opt;
  opt.widening_delay = config.widening_delay;
  opt.narrowing = config.narrowing;
  opt.max_iterations = config.max_iterations;

  FreshVarGen fv;
  LoopHooks hooks(prog);
  EdgeHook hook = [&hooks](const Edge& e, AbstractState s, FreshVarGen& gen) {
    return hooks(e, std::move(s), gen);
  };

  auto start = std::chrono::steady_clock::now();
  AnalysisResult result =
      analyze(prog, fv, opt, loop_initial_state(prog.loops, fv), hook);
  long elapsed_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start)
                        .count();
  if (!config.timing) elapsed_ms = 0;  // keep output reproducible

  if (!result.stabilized) {
    err << "analysis did not stabilize within the iteration cap\n";
    return 4;
  }
  BoundReport rep = report(result, prog, hooks.relations());

  if (config.dump_states) {
    for (const auto& [e, s] : result.edge_states) {
      out << "== edge " << edge_name(e, prog.cfg) << "\n"
          << s.to_debug_string() << "\n";
    }
  }

  if (config.format == RunConfig::Format::Text) {
    if (rep.loops.empty()) {
      out << "no loops found\n";
    } else {
      for (const auto& l : rep.loops) {
        out << l.label << ": max=" << l.max_bound.to_string()
            << " total=" << l.total_bound.to_string();
        if (l.relation) out << " relation=" << relation_string(*l.relation);
        out << "\n";
      }
    }
    if (config.timing) out << "elapsed_ms=" << elapsed_ms << "\n";
  } else {
    nlohmann::ordered_json doc;
    doc["program"] = config.input_path.empty() ? "<text>" : config.input_path;
    doc["loops"] = nlohmann::ordered_json::array();
    for (const auto& l : rep.loops) {
      nlohmann::ordered_json entry;
      entry["header"] = l.header;
      entry["label"] = l.label;
      entry["max"] = l.max_bound.to_string();
      entry["total"] = l.total_bound.to_string();
      entry["relation"] =
          l.relation ? relation_string(*l.relation) : std::string("none");
      doc["loops"].push_back(std::move(entry));
    }
    doc["iterations"] = result.iterations;
    doc["elapsed_ms"] = elapsed_ms;
    out << doc.dump(2) << "\n";
  }
  return 0;
}

int run_cli(const RunConfig& config, std::ostream& out, std::ostream& err) {
  std::ifstream in(config.input_path);
  if (!in) {
    err << "cannot open " << config.input_path << "\n";
    return 2;
  }
  std::ostringstream text;
  text << in.rdbuf();
  return run_on_text(text.str(), config, out, err);
}

}  // namespace polybound
