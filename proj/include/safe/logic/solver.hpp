#pragma once

#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "safe/logic/context.hpp"

namespace safe::logic {

struct SolveLimits {
  uint32_t max_answers = 100000;
  uint64_t max_steps = 200'000'000;
  int64_t deadline_ms = 0;  // wall-clock budget; 0 = unlimited

  static SolveLimits one_answer(int64_t deadline = 0) {
    return SolveLimits{1, 200'000'000, deadline};
  }
};

enum class StopReason : uint8_t {
  Completed,   // search saturated; answer set is complete
  AnswerCap,   // stopped after max_answers
  StepBudget,  // stopped after max_steps
  Deadline,    // stopped at the wall-clock deadline
};

std::string_view stop_reason_name(StopReason r);

struct SolveResult {
  std::vector<Answer> answers;
  StopReason stop = StopReason::Completed;
  uint64_t steps = 0;
};

struct ProveResult {
  bool holds = false;
  StopReason stop = StopReason::Completed;
  uint64_t steps = 0;
  // Origin tokens of the statements used in the successful derivation
  // (deduplicated; empty origins omitted).
  std::vector<std::string> trace;
  std::vector<Answer> answers;  // at most one
};

// Raised for goals naming unregistered builtins (reserved-namespace
// predicates with no implementation, or a builtin called at wrong arity).
struct UnknownBuiltinError : std::runtime_error {
  explicit UnknownBuiltinError(const std::string& what)
      : std::runtime_error(what) {}
};

// Raised when a builtin is invoked with insufficiently bound or ill-typed
// arguments at evaluation time.
struct BuiltinEvalError : std::runtime_error {
  explicit BuiltinEvalError(const std::string& what)
      : std::runtime_error(what) {}
};

// Tabled top-down evaluation of a conjunctive query. Sound and complete with
// respect to the minimal model up to the given limits; terminates on every
// pure-Datalog context. Answers are deterministic for a fixed context and
// query (order is an implementation detail; compare as sets).
SolveResult solve(const IndexedContext& ctx, const std::vector<Atom>& query,
                  const SolveLimits& limits = {});

// solve with max_answers = 1 plus a derivation trace.
ProveResult prove(const IndexedContext& ctx, const Atom& goal,
                  const SolveLimits& limits = SolveLimits::one_answer());
ProveResult prove_conjunction(const IndexedContext& ctx,
                              const std::vector<Atom>& query,
                              const SolveLimits& limits = SolveLimits::one_answer());

}  // namespace safe::logic
