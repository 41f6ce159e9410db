#pragma once

#include <random>

#include "safe/cache/set_cache.hpp"
#include "safe/logic/context.hpp"

namespace safe::cache {

struct ContextServiceConfig {
  store::ClosureLimits closure;
  size_t context_capacity = 1024;
  size_t set_capacity = 4096;
  int64_t throttle_ms = 1000;
  // Refresh delay is throttle_ms * U[jitter_min, jitter_max].
  double jitter_min = 0.5;
  double jitter_max = 1.0;
  bool secondary_index = true;
  uint64_t jitter_seed = 0;  // 0 = nondeterministic
};

struct AssembledContext {
  logic::ContextPtr context;
  std::string key;  // hash of the sorted root-token list
  std::vector<cert::Token> roots;
  std::vector<cert::Token> members;  // validated set tokens in the union
  std::vector<std::pair<cert::Token, std::string>> skipped;
  size_t statement_count = 0;
  int64_t earliest_expiry = logic::kNoExpiry;
  bool cache_hit = false;
};

enum class AssembleErrorKind : uint8_t {
  LimitExceeded,
  AllRootsMissing,
  ContentError,  // e.g. predicate arity conflict across sets
};

struct AssembleError : std::runtime_error {
  AssembleError(AssembleErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind(kind) {}
  AssembleErrorKind kind;
};

struct RefreshOutcome {
  bool refreshed = false;
  int64_t retry_after_ms = 0;
  std::optional<AssembledContext> rebuilt;
};

struct ContextMetrics {
  uint64_t hits = 0;
  uint64_t misses = 0;
  uint64_t refreshes = 0;
  uint64_t throttled = 0;
  SetCacheMetrics sets;
};

// Context assembly from root-token lists, with a TTL/earliest-expiry context
// cache and the failed-query invalidate/refresh policy.
class ContextService {
 public:
  ContextService(store::StoreClient& store, std::shared_ptr<Clock> clock,
                 ContextServiceConfig config = {});

  // Union of the closures of all roots, rendered once into an indexed
  // context and cached under the sorted-token key. Throws AssembleError.
  AssembledContext assemble(const std::vector<cert::Token>& roots);

  // Failed-guard hook: if the throttle allows, invalidates the context and
  // its member sets, refetches, rebuilds, and arms a new throttle deadline;
  // otherwise reports the remaining delay.
  RefreshOutcome refresh_on_failure(const AssembledContext& ctx);

  void invalidate_context(const std::string& key);
  ContextMetrics metrics();
  SetCache& sets() { return set_cache_; }
  const ContextServiceConfig& config() const { return config_; }

  static std::string context_key(std::vector<cert::Token> roots);

 private:
  struct Entry {
    logic::ContextPtr context;
    std::vector<cert::Token> roots;
    std::vector<cert::Token> members;
    std::vector<std::pair<cert::Token, std::string>> skipped;
    size_t statement_count = 0;
    int64_t earliest_expiry = logic::kNoExpiry;
  };

  AssembledContext build(const std::vector<cert::Token>& roots,
                         const std::string& key);

  store::StoreClient& store_;
  std::shared_ptr<Clock> clock_;
  ContextServiceConfig config_;
  SetCache set_cache_;
  std::mutex mu_;
  LruMap<std::string, Entry> contexts_;
  std::unordered_map<std::string, int64_t> throttle_;  // key -> next allowed
  std::mt19937_64 jitter_rng_;
  uint64_t hits_ = 0, misses_ = 0, refreshes_ = 0, throttled_ = 0;
};

}  // namespace safe::cache
