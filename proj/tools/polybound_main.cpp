#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "polybound/cli.hpp"

int main(int argc, char** argv) {
  polybound::RunConfig config;
  std::string format = "text";

  CLI::App app{"Polyhedral value analysis and loop bound estimation for the "
               "toy register ISA"};
  app.add_option("file", config.input_path, "assembly listing to analyze")
      ->required();
  app.add_option("--format", format, "output format: text or structured")
      ->check(CLI::IsMember({"text", "structured", "json"}));
  app.add_option("--widening-delay", config.widening_delay,
                 "header visits joined before widening starts")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--no-narrowing", [&](size_t) { config.narrowing = false; },
               "skip the descending pass after stabilization");
  app.add_option("--max-iterations", config.max_iterations,
                 "node evaluation cap (default 10 * |E|)");
  app.add_flag("--dump-states", config.dump_states,
               "print the abstract state of every edge");
  app.add_flag("--time", config.timing, "report wall clock time");

  CLI11_PARSE(app, argc, argv);
  config.format = format == "text" ? polybound::RunConfig::Format::Text
                                   : polybound::RunConfig::Format::Structured;
  return polybound::run_cli(config, std::cout, std::cerr);
}
