#include "safe/store/closure.hpp"

#include <future>
#include <unordered_set>

namespace safe::store {

ClosureResult fetch_closure(const SetResolver& resolve,
                            const cert::Token& root,
                            const ClosureLimits& limits) {
  ClosureResult result;
  std::unordered_set<cert::Token> visited;  // scheduled or done
  std::vector<cert::Token> frontier = {root};
  visited.insert(root);
  size_t depth = 0;

  while (!frontier.empty()) {
    if (depth > limits.max_depth) {
      result.truncated = true;
      break;
    }
    // Resolve the whole level, a bounded batch at a time.
    std::vector<ResolveOutcome> outcomes(frontier.size());
    size_t batch = limits.concurrency ? limits.concurrency : 1;
    for (size_t start = 0; start < frontier.size(); start += batch) {
      size_t end = std::min(frontier.size(), start + batch);
      std::vector<std::future<ResolveOutcome>> futs;
      futs.reserve(end - start);
      for (size_t i = start; i < end; ++i)
        futs.push_back(std::async(std::launch::async,
                                  [&, i] { return resolve(frontier[i]); }));
      for (size_t i = start; i < end; ++i) outcomes[i] = futs[i - start].get();
    }

    std::vector<cert::Token> next;
    for (size_t i = 0; i < frontier.size(); ++i) {
      auto& oc = outcomes[i];
      if (!oc.set) {
        if (depth == 0 && frontier[i] == root &&
            oc.skip_reason == "not-found")
          result.root_missing = true;
        result.skipped.emplace_back(frontier[i], oc.skip_reason);
        continue;
      }
      if (result.sets.size() >= limits.max_sets ||
          result.statement_count + oc.set->statement_count() >
              limits.max_statements) {
        result.truncated = true;
        return result;
      }
      result.statement_count += oc.set->statement_count();
      for (const auto& link : oc.set->set.links) {
        if (!visited.insert(link).second) continue;  // cycle or repeat
        if (depth + 1 > limits.max_depth) {
          result.truncated = true;
          continue;
        }
        next.push_back(link);
      }
      result.sets.push_back(std::move(*oc.set));
    }
    frontier = std::move(next);
    ++depth;
  }
  return result;
}

}  // namespace safe::store
