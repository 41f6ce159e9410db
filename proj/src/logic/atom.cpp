#include "safe/logic/atom.hpp"

#include <algorithm>

namespace safe::logic {

bool Atom::is_ground() const {
  if (speaker.is_variable()) return false;
  return std::all_of(args.begin(), args.end(),
                     [](const Term& t) { return t.is_ground(); });
}

std::string Atom::text() const {
  std::string s;
  if (speaker.kind() != TermKind::SelfRef) {
    s += speaker.canonical();
    s += ": ";
  }
  s += predicate;
  s += '(';
  for (size_t i = 0; i < args.size(); ++i) {
    if (i) s += ", ";
    s += args[i].canonical();
  }
  s += ')';
  return s;
}

std::string Statement::text() const {
  std::string s = head.text();
  if (!body.empty()) {
    s += " :- ";
    for (size_t i = 0; i < body.size(); ++i) {
      if (i) s += ", ";
      s += body[i].text();
    }
  }
  s += '.';
  return s;
}

std::optional<Term> Answer::lookup(const std::string& var) const {
  for (const auto& [name, value] : bindings)
    if (name == var) return value;
  return std::nullopt;
}

std::string Answer::key() const {
  std::string s;
  for (const auto& [name, value] : bindings) {
    s += name;
    s += '=';
    s += value.canonical();
    s += ';';
  }
  return s;
}

}  // namespace safe::logic
