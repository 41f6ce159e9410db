#pragma once

#include <iosfwd>
#include <optional>

#include "safe/apps/apps.hpp"

namespace safe::bench {

struct BenchOptions {
  std::string scenario;
  uint64_t seed = 1;
  bool secondary_index = true;
  std::string scripts_dir;

  // Scenario knobs (defaults are desk scale).
  int chain_min = 2, chain_max = 16, chain_step = 2;
  int noisy_max = 12;          // noisy curves stop here (cost ~4^n)
  int tree_height = 5, tree_branching = 4;
  int acl_size = 2000;
  int prop_min = 50, prop_max = 450, prop_step = 50;
  int as_tree_depth = 4, as_tree_branching = 8;
  int route_count = 64;
  int principals = 24, objects = 12, chain_len = 3;
  int requests = 400;
  int update_pct = 40;
  int throttle_ms = 1000;
  int warmup = 32;  // rounds excluded from summaries
};

struct Row {
  std::string scenario;
  std::string mode;     // curve / linking mode / query model
  int64_t param = 0;    // x-axis value (chain length, property count, round)
  int64_t request = 0;  // request index within the run
  bool decision = false;
  uint64_t steps = 0;
  uint64_t context_sets = 0;
  uint64_t context_stmts = 0;
  uint64_t fetches = 0;
  bool cache_hit = false;
  uint64_t refreshes = 0;
  int64_t latency_us = 0;  // timing column; excluded from reproducibility
};

struct BenchResult {
  std::vector<Row> rows;
  std::vector<std::string> summary;  // human-readable p50/p95 lines
};

// The delegation-chain fixture behind the pruning scenarios: a real posted
// membership chain of length n plus, in noisy mode, a synthetic binary
// distractor tree injected directly into the context (pruning deliberately
// bypassed, as the measurement requires).
struct ChainFixture {
  std::vector<logic::Statement> pruned;
  std::vector<logic::Statement> noisy;
  std::vector<logic::Atom> query;
};
ChainFixture gen_delegation_chain(apps::AppHarness& h,
                                  apps::StrongDriver& strong, int n,
                                  int noisy_height);

BenchResult run_experiment(const BenchOptions& options);

std::vector<std::string> scenario_names();
void write_csv(const BenchResult& result, std::ostream& out);

// Least-squares helpers shared with the acceptance suite.
struct LinearFit {
  double slope = 0, intercept = 0, relative_residual = 0;
};
LinearFit fit_linear(const std::vector<double>& xs,
                     const std::vector<double>& ys);

double percentile(std::vector<double> values, double p);

}  // namespace safe::bench
