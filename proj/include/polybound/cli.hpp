#pragma once

#include <iosfwd>
#include <string>

#include "polybound/fixpoint.hpp"

namespace polybound {

struct RunConfig {
  std::string input_path;
  enum class Format { Text, Structured } format = Format::Text;
  int widening_delay = 2;
  bool narrowing = true;
  long max_iterations = 0;  // 0: 10 * |E|
  bool dump_states = false;
  bool timing = false;
};

// Exit codes: 0 ok, 2 parse error, 3 irreducible control flow,
// 4 iteration cap exceeded, 1 other failures.
int run_cli(const RunConfig& config, std::ostream& out, std::ostream& err);

// Analyze program text directly (the CLI after file loading; used by tests).
int run_on_text(const std::string& text, const RunConfig& config,
                std::ostream& out, std::ostream& err);

}  // namespace polybound
