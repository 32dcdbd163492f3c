#include "uavswarm/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace uavswarm;
  CLI::App app{"UAV switching-formation simulator"};
  app.require_subcommand(1);

  CommandOptions opts;
  std::string path;
  std::uint64_t seed = 0;
  std::int64_t steps = 0;
  // one --out per subcommand: default_val writes through immediately
  std::string assign_out, run_out, sum_out;

  auto* validate = app.add_subcommand("validate", "check a scenario file");
  validate->add_option("scenario", path, "scenario JSON file")->required();

  auto* assign = app.add_subcommand("assign", "plan every formation switch, write plan files");
  assign->add_option("scenario", path, "scenario JSON file")->required();
  assign->add_option("--out", assign_out, "output directory")->default_val("out");

  auto* runcmd = app.add_subcommand("run", "simulate, write log, summary and report");
  runcmd->add_option("scenario", path, "scenario JSON file")->required();
  runcmd->add_option("--out", run_out, "output directory")->default_val("out");
  auto* seed_opt = runcmd->add_option("--seed", seed, "override the scenario seed");
  auto* steps_opt = runcmd->add_option("--steps", steps, "override the step count")->check(CLI::PositiveNumber);
  runcmd->add_flag("--baseline", opts.baseline, "also run the time-triggered baseline");
  runcmd->add_option("--threads", opts.threads, "worker threads")->check(CLI::PositiveNumber);

  auto* sumcmd = app.add_subcommand("summarize", "recompute the summary from a step log");
  sumcmd->add_option("log", path, "step log written by run")->required();
  sumcmd->add_option("--out", sum_out, "write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  if (*seed_opt) opts.seed = seed;
  if (*steps_opt) opts.steps = steps;
  opts.out = *assign ? assign_out : *runcmd ? run_out : sum_out;

  try {
    if (*validate) return cmd_validate(path, std::cout, std::cerr);
    if (*assign) return cmd_assign(path, opts, std::cout, std::cerr);
    if (*runcmd) return cmd_run(path, opts, std::cout, std::cerr);
    return cmd_summarize(path, opts, std::cout, std::cerr);
  } catch (const RuntimeAbort& e) {
    std::cerr << "runtime abort at " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
