#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "safe/logic/atom.hpp"

namespace safe::logic {

constexpr int64_t kNoExpiry = std::numeric_limits<int64_t>::max();

struct ContextOptions {
  bool secondary_index = true;
  int64_t earliest_expiry = kNoExpiry;  // min over origin certificate expiries
};

// An immutable, indexed statement collection. Statements are indexed by
// (predicate, arity) and, when the secondary index is enabled, additionally
// by the ground first explicit argument of the head. Lookups through either
// index return the same candidate set for any goal.
class IndexedContext {
 public:
  IndexedContext(std::vector<Statement> statements, ContextOptions opts = {});

  const std::vector<Statement>& statements() const { return statements_; }
  size_t size() const { return statements_.size(); }
  int64_t earliest_expiry() const { return opts_.earliest_expiry; }
  bool secondary_enabled() const { return opts_.secondary_index; }

  // Invokes fn(index) for each statement whose head may match a goal with
  // this predicate/arity/first-arg, in statement order. Returns the number
  // of candidates visited.
  template <typename Fn>
  size_t for_each_candidate(const std::string& predicate, size_t arity,
                            const Term* ground_first_arg, Fn&& fn) const {
    size_t visited = 0;
    if (opts_.secondary_index && ground_first_arg != nullptr) {
      auto b = secondary_.find(sec_key(predicate, arity, *ground_first_arg));
      auto w = wildcard_.find(pred_key(predicate, arity));
      // Merge the two lists in statement order so candidate order is
      // identical to the primary-index path.
      const std::vector<uint32_t> empty;
      const auto& bs = b == secondary_.end() ? empty : b->second;
      const auto& ws = w == wildcard_.end() ? empty : w->second;
      size_t i = 0, j = 0;
      while (i < bs.size() || j < ws.size()) {
        uint32_t next;
        if (j >= ws.size() || (i < bs.size() && bs[i] < ws[j])) {
          next = bs[i++];
        } else {
          next = ws[j++];
        }
        ++visited;
        fn(next);
      }
      return visited;
    }
    auto p = primary_.find(pred_key(predicate, arity));
    if (p == primary_.end()) return 0;
    for (uint32_t idx : p->second) {
      ++visited;
      fn(idx);
    }
    return visited;
  }

  // True if any statement defines this predicate (any arity).
  bool defines_predicate(const std::string& predicate) const {
    return defined_.count(predicate) > 0;
  }

 private:
  static std::string pred_key(const std::string& p, size_t arity);
  static std::string sec_key(const std::string& p, size_t arity,
                             const Term& first);

  std::vector<Statement> statements_;
  ContextOptions opts_;
  std::unordered_map<std::string, std::vector<uint32_t>> primary_;
  std::unordered_map<std::string, std::vector<uint32_t>> secondary_;
  // Statements with a non-ground first head argument, per (pred, arity).
  std::unordered_map<std::string, std::vector<uint32_t>> wildcard_;
  std::unordered_map<std::string, size_t> defined_;  // predicate -> arity
};

using ContextPtr = std::shared_ptr<const IndexedContext>;

// Builds a context, checking arity consistency per predicate across all
// heads and bodies. Throws std::invalid_argument on conflict.
ContextPtr build_context(std::vector<Statement> statements,
                         ContextOptions opts = {});

}  // namespace safe::logic
