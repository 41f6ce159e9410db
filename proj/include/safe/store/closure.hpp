#pragma once

#include <functional>
#include <string>
#include <vector>

#include "safe/cert/certificate.hpp"

namespace safe::store {

struct ClosureLimits {
  size_t max_sets = 512;
  size_t max_statements = 8192;
  size_t max_depth = 32;
  size_t concurrency = 8;
};

struct ClosureResult {
  std::vector<cert::ValidatedSet> sets;  // deduplicated, BFS order
  std::vector<std::pair<cert::Token, std::string>> skipped;  // (token, reason)
  bool truncated = false;
  bool root_missing = false;
  size_t statement_count = 0;
};

// Resolves one token to a validated set, or a reason to skip it (missing,
// invalid, expired, ...). Must be safe to call from worker threads.
struct ResolveOutcome {
  std::optional<cert::ValidatedSet> set;
  std::string skip_reason;
};
using SetResolver = std::function<ResolveOutcome(const cert::Token&)>;

// Breadth-first closure over the link DAG. Each token is resolved at most
// once; cycles are ignored; invalid links are recorded in `skipped` without
// aborting; `truncated` is set exactly when a limit cut something off.
// Fetches within a BFS level proceed concurrently up to limits.concurrency.
ClosureResult fetch_closure(const SetResolver& resolve,
                            const cert::Token& root,
                            const ClosureLimits& limits = {});

}  // namespace safe::store
