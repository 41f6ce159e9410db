#pragma once

#include <condition_variable>
#include <memory>
#include <mutex>

#include "safe/cache/clock.hpp"
#include "safe/cache/lru.hpp"
#include "safe/store/closure.hpp"
#include "safe/store/store.hpp"

namespace safe::cache {

struct SetCacheConfig {
  size_t capacity = 4096;
};

struct SetCacheMetrics {
  uint64_t hits = 0;
  uint64_t misses = 0;
  uint64_t evictions = 0;
};

// TTL-consistent validated-set cache over a store client. Entries are never
// served past their certificate expiry; concurrent misses on one token
// trigger exactly one store fetch (per-key single flight).
class SetCache {
 public:
  SetCache(store::StoreClient& store, std::shared_ptr<Clock> clock,
           SetCacheConfig config = {});

  // Fresh cache hit, or fetch + verify + insert. Misses and validation
  // failures come back as skip reasons ("not-found", cert error names).
  store::ResolveOutcome get(const cert::Token& token);

  void invalidate(const cert::Token& token);
  SetCacheMetrics metrics();

  store::SetResolver resolver() {
    return [this](const cert::Token& t) { return get(t); };
  }

 private:
  struct InFlight {
    bool done = false;
    store::ResolveOutcome result;
    std::condition_variable cv;
  };

  store::StoreClient& store_;
  std::shared_ptr<Clock> clock_;
  std::mutex mu_;
  LruMap<cert::Token, std::shared_ptr<const cert::ValidatedSet>> entries_;
  std::unordered_map<cert::Token, std::shared_ptr<InFlight>> in_flight_;
  SetCacheMetrics metrics_;
};

}  // namespace safe::cache
