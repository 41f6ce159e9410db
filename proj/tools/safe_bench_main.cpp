// safe-bench: workload generators and measurements over the guard stack.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "safe/bench/bench.hpp"

#ifndef SAFE_DEFAULT_SCRIPTS_DIR
#define SAFE_DEFAULT_SCRIPTS_DIR "scripts"
#endif

int main(int argc, char** argv) {
  CLI::App app{"safe-bench: desk-scale trust-platform experiments"};

  safe::bench::BenchOptions o;
  o.scripts_dir = SAFE_DEFAULT_SCRIPTS_DIR;
  std::string out_path;
  bool list = false;
  bool no_secondary = false;

  app.add_flag("--list", list, "list scenarios and exit");
  app.add_option("scenario", o.scenario, "scenario name");
  app.set_config("--config", "", "scenario fixture file (key = value lines)");
  app.add_option("--seed", o.seed, "workload seed");
  app.add_option("--out", out_path, "CSV output file (default stdout)");
  app.add_flag("--no-secondary-index", no_secondary,
               "disable the secondary statement index");
  app.add_option("--scripts-dir", o.scripts_dir, "script package directory");
  app.add_option("--chain-min", o.chain_min);
  app.add_option("--chain-max", o.chain_max);
  app.add_option("--chain-step", o.chain_step);
  app.add_option("--noisy-max", o.noisy_max,
                 "largest n for noisy curves (cost grows ~4^n)");
  app.add_option("--tree-height", o.tree_height);
  app.add_option("--tree-branching", o.tree_branching);
  app.add_option("--acl-size", o.acl_size);
  app.add_option("--prop-min", o.prop_min);
  app.add_option("--prop-max", o.prop_max);
  app.add_option("--prop-step", o.prop_step);
  app.add_option("--as-tree-depth", o.as_tree_depth);
  app.add_option("--as-tree-branching", o.as_tree_branching);
  app.add_option("--routes", o.route_count);
  app.add_option("--principals", o.principals);
  app.add_option("--objects", o.objects);
  app.add_option("--requests", o.requests);
  app.add_option("--update-pct", o.update_pct);
  app.add_option("--throttle-ms", o.throttle_ms);

  CLI11_PARSE(app, argc, argv);

  if (list) {
    for (const auto& s : safe::bench::scenario_names())
      std::cout << s << "\n";
    return 0;
  }
  if (o.scenario.empty()) {
    std::cerr << "missing scenario (try --list)\n";
    return 2;
  }
  o.secondary_index = !no_secondary;

  try {
    auto result = safe::bench::run_experiment(o);
    if (out_path.empty()) {
      safe::bench::write_csv(result, std::cout);
    } else {
      std::ofstream out(out_path);
      if (!out.good()) {
        std::cerr << "cannot write " << out_path << "\n";
        return 1;
      }
      safe::bench::write_csv(result, out);
    }
    for (const auto& line : result.summary) std::cerr << line << "\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
