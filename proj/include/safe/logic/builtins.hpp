#pragma once

#include <optional>
#include <string>
#include <vector>

#include "safe/logic/atom.hpp"

namespace safe::logic {

// The closed builtin set: equality/inequality, ordering over numbers and
// strings, and the IPv4 range predicates. `ipv4_` is a reserved predicate
// namespace; statements may not define heads with these names.
bool is_builtin_name(const std::string& predicate);
bool is_reserved_predicate(const std::string& predicate);

struct BuiltinOutcome {
  bool success = false;
  // For `equals` with one unbound side: the variable and value it binds.
  std::optional<std::pair<std::string, Term>> binding;
};

// Evaluates a builtin goal. All arguments must be ground, except that
// `equals` may bind a single variable. Throws UnknownBuiltinError for
// unregistered reserved names or arity mismatches and BuiltinEvalError for
// unbound/ill-typed arguments.
BuiltinOutcome eval_builtin(const Atom& goal);

}  // namespace safe::logic
