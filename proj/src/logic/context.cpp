#include "safe/logic/context.hpp"

#include <stdexcept>

namespace safe::logic {

std::string IndexedContext::pred_key(const std::string& p, size_t arity) {
  return p + "/" + std::to_string(arity);
}

std::string IndexedContext::sec_key(const std::string& p, size_t arity,
                                    const Term& first) {
  std::string k = p + "/" + std::to_string(arity);
  k += '\x1f';
  k += static_cast<char>(first.kind());
  k += first.text();
  return k;
}

IndexedContext::IndexedContext(std::vector<Statement> statements,
                               ContextOptions opts)
    : statements_(std::move(statements)), opts_(opts) {
  auto check_arity = [this](const Atom& a) {
    auto [it, inserted] = defined_.emplace(a.predicate, a.arity());
    if (!inserted && it->second != a.arity())
      throw std::invalid_argument(
          "arity conflict for predicate '" + a.predicate + "': " +
          std::to_string(it->second) + " vs " + std::to_string(a.arity()));
  };
  for (uint32_t i = 0; i < statements_.size(); ++i) {
    const Statement& st = statements_[i];
    check_arity(st.head);
    for (const auto& b : st.body) check_arity(b);

    const std::string pk = pred_key(st.head.predicate, st.head.arity());
    primary_[pk].push_back(i);
    if (st.head.args.empty()) continue;
    const Term& first = st.head.args[0];
    if (first.is_ground()) {
      secondary_[sec_key(st.head.predicate, st.head.arity(), first)].push_back(i);
    } else {
      wildcard_[pk].push_back(i);
    }
  }
}

ContextPtr build_context(std::vector<Statement> statements,
                         ContextOptions opts) {
  return std::make_shared<const IndexedContext>(std::move(statements), opts);
}

}  // namespace safe::logic
