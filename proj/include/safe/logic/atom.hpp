#pragma once

#include <optional>
#include <string>
#include <vector>

#include "safe/logic/term.hpp"

namespace safe::logic {

// A speaker-prefixed atom. The speaker is tracked as a hidden argument-0:
// two atoms unify only if their speakers unify.
struct Atom {
  Term speaker;  // SelfRef until resolved, or any ground term / variable
  std::string predicate;
  std::vector<Term> args;

  bool is_ground() const;
  size_t arity() const { return args.size(); }

  // Canonical text, e.g. `p9f..A: cap(alice, obj, read, true)`. The speaker
  // prefix is omitted when it is the $Self placeholder.
  std::string text() const;

  bool operator==(const Atom& o) const {
    return speaker == o.speaker && predicate == o.predicate && args == o.args;
  }
  bool operator!=(const Atom& o) const { return !(*this == o); }
};

// A fact (empty body) or rule. `origin` identifies the certificate set the
// statement came from (empty for local/synthetic statements).
struct Statement {
  Atom head;
  std::vector<Atom> body;
  std::string origin;  // set token text, or empty

  bool is_fact() const { return body.empty(); }

  // Canonical text: `head.` or `head :- b1, b2.`
  std::string text() const;

  bool operator==(const Statement& o) const {
    return head == o.head && body == o.body;
  }
};

// One solution: bindings from query variable names to ground terms.
struct Answer {
  std::vector<std::pair<std::string, Term>> bindings;  // sorted by name

  std::optional<Term> lookup(const std::string& var) const;
  std::string key() const;  // canonical text for set comparisons
};

}  // namespace safe::logic
