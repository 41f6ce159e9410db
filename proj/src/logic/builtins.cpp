#include "safe/logic/builtins.hpp"

#include <array>

#include "safe/logic/ipv4.hpp"
#include "safe/logic/solver.hpp"

namespace safe::logic {

namespace {

constexpr std::array<std::string_view, 8> kBuiltins = {
    "equals", "neq", "lt", "le", "gt", "ge", "ipv4_contains", "ipv4_in_range"};

bool registered(const std::string& p) {
  for (auto b : kBuiltins)
    if (p == b) return true;
  return false;
}

Ipv4Prefix require_prefix(const Term& t, const Atom& goal) {
  if (t.kind() != TermKind::Ipv4Prefix) {
    // Prefix-shaped strings are accepted for convenience of interpolated
    // script arguments; anything else is a type error.
    auto p = parse_ipv4_prefix(t.text());
    if (!p)
      throw BuiltinEvalError("malformed ipv4 prefix in " + goal.text() + ": " +
                             t.canonical());
    return *p;
  }
  return *parse_ipv4_prefix(t.text());
}

int compare_terms(const Term& a, const Term& b, const Atom& goal) {
  if (a.kind() == TermKind::Number && b.kind() == TermKind::Number) {
    int64_t x = a.number_value(), y = b.number_value();
    return x < y ? -1 : x > y ? 1 : 0;
  }
  if (a.kind() == TermKind::String && b.kind() == TermKind::String)
    return a.text().compare(b.text()) < 0   ? -1
           : a.text().compare(b.text()) > 0 ? 1
                                            : 0;
  throw BuiltinEvalError("cannot order " + a.canonical() + " and " +
                         b.canonical() + " in " + goal.text());
}

}  // namespace

bool is_builtin_name(const std::string& predicate) {
  return registered(predicate);
}

bool is_reserved_predicate(const std::string& predicate) {
  return registered(predicate) || predicate.rfind("ipv4_", 0) == 0;
}

BuiltinOutcome eval_builtin(const Atom& goal) {
  const std::string& p = goal.predicate;
  if (!registered(p))
    throw UnknownBuiltinError("unknown builtin predicate: " + p);
  if (goal.args.size() != 2)
    throw UnknownBuiltinError("builtin " + p + " expects 2 arguments, got " +
                              std::to_string(goal.args.size()));
  const Term& a = goal.args[0];
  const Term& b = goal.args[1];

  if (p == "equals") {
    if (a.is_variable() && b.is_variable())
      throw BuiltinEvalError("equals with two unbound variables: " + goal.text());
    if (a.is_variable()) return {true, {{a.text(), b}}};
    if (b.is_variable()) return {true, {{b.text(), a}}};
    return {a == b, std::nullopt};
  }

  if (a.is_variable() || b.is_variable())
    throw BuiltinEvalError("unbound argument in builtin: " + goal.text());

  if (p == "neq") return {!(a == b), std::nullopt};
  if (p == "lt") return {compare_terms(a, b, goal) < 0, std::nullopt};
  if (p == "le") return {compare_terms(a, b, goal) <= 0, std::nullopt};
  if (p == "gt") return {compare_terms(a, b, goal) > 0, std::nullopt};
  if (p == "ge") return {compare_terms(a, b, goal) >= 0, std::nullopt};
  if (p == "ipv4_contains")
    return {ipv4_contains(require_prefix(a, goal), require_prefix(b, goal)),
            std::nullopt};
  // ipv4_in_range
  return {ipv4_in_range(require_prefix(a, goal), require_prefix(b, goal)),
          std::nullopt};
}

}  // namespace safe::logic
