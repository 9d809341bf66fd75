#include <iostream>

#include "CLI11.hpp"
#include "cmtsim/cli.hpp"

int main(int argc, char** argv) {
  using namespace cmtsim::cli;

  CLI::App app{"Discrete-event simulator for concurrent multipath transfer congestion control"};
  app.require_subcommand(1);

  Options opt;
  int figure = 0;
  auto add_common = [&](CLI::App* cmd, bool with_figure) {
    cmd->add_option("--config", opt.config_path, "flat key=value config file");
    cmd->add_option("--set", opt.overrides, "override one key, key=value (repeatable)")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    cmd->add_option("--out", opt.out_dir, "directory for relative output paths");
    cmd->add_option("--jobs", opt.jobs, "parallel simulation instances")->check(CLI::PositiveNumber);
    if (with_figure) cmd->add_option("--figure", figure, "figure preset");
  };

  auto* run = app.add_subcommand("run", "simulate one (scenario, algo, seed) point");
  auto* sweep = app.add_subcommand("sweep", "simulate a grid of points over seeds and controllers");
  auto* trace = app.add_subcommand("trace", "record the congestion window evolution of one point");
  add_common(run, false);
  add_common(sweep, true);
  add_common(trace, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  if (figure != 0) opt.figure = figure;

  if (run->parsed()) return cmd_run(opt, std::cout, std::cerr);
  if (sweep->parsed()) return cmd_sweep(opt, std::cout, std::cerr);
  return cmd_trace(opt, std::cout, std::cerr);
}
