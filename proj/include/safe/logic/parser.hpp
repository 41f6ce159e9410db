#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "safe/logic/atom.hpp"

namespace safe::logic {

struct ParseError : std::runtime_error {
  ParseError(int line, int col, const std::string& msg)
      : std::runtime_error("parse error at " + std::to_string(line) + ":" +
                           std::to_string(col) + ": " + msg),
        line(line),
        col(col) {}
  int line;
  int col;
};

// Parses a program: statements terminated by `.`. Speakers default to the
// $Self placeholder when the `Speaker:` prefix is omitted. Enforces range
// restriction (every head variable occurs in the body; fact heads ground up
// to $Self), rejects negation and function symbols, and rejects statements
// whose head predicate is a reserved builtin name.
std::vector<Statement> parse_program(std::string_view text);

// Parses a conjunctive query: atoms separated by `,`, optionally terminated
// by `?` or `.`.
std::vector<Atom> parse_query(std::string_view text);

// Parses a single ground or non-ground term (used by interpolation checks).
Term parse_term(std::string_view text);

}  // namespace safe::logic
