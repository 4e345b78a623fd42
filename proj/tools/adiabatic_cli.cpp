#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "adiabatic/harness/commands.hpp"

int main(int argc, char** argv) {
  namespace h = adiabatic::harness;
  CLI::App app{"Adiabatic leakage experiments on a discretized continuous spectrum"};
  app.require_subcommand(1);

  h::CommandOptions opts;
  std::string out_dir;
  std::size_t steps = 0;
  double threshold = 0.0;
  double target_T = 0.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config, "Experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides [output] directory)");
    sub->add_option("--jobs", opts.jobs, "Worker threads for sweep")->check(CLI::PositiveNumber);
    sub->add_option("--steps", steps, "Override [run] steps")->check(CLI::PositiveNumber);
    sub->add_option("--threshold", threshold, "Override [analysis] threshold")->check(CLI::PositiveNumber);
  };
  for (const char* name : {"simulate", "sweep", "criterion", "verify"}) {
    add_common(app.add_subcommand(name));
  }
  CLI::App* bands = app.add_subcommand("bands", "Pick the smallest band size meeting the gap margin");
  add_common(bands);
  CLI::Option* target = bands->add_option("--target-T", target_T, "Target T (defaults to [run] T)")->check(CLI::PositiveNumber);
  app.get_subcommand("simulate")->description("Propagate one T and report leakage");
  app.get_subcommand("sweep")->description("Leakage over T_list with a log-log fit");
  app.get_subcommand("criterion")->description("Evaluate the adiabaticity margin (exit 4 if unsatisfied)");
  app.get_subcommand("verify")->description("Run the invariant checks (exit 1 on failure)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : h::exit_code::config;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (!out_dir.empty()) opts.out = out_dir;
  if (sub->count("--steps")) opts.steps = steps;
  if (sub->count("--threshold")) opts.threshold = threshold;
  if (sub == bands && target->count()) opts.target_T = target_T;
  return h::run_command(sub->get_name(), opts, std::cout, std::cerr);
}
