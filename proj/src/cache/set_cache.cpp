#include "safe/cache/set_cache.hpp"

namespace safe::cache {

SetCache::SetCache(store::StoreClient& store, std::shared_ptr<Clock> clock,
                   SetCacheConfig config)
    : store_(store), clock_(std::move(clock)), entries_(config.capacity) {}

store::ResolveOutcome SetCache::get(const cert::Token& token) {
  std::unique_lock lk(mu_);
  int64_t now = clock_->now_ms();
  if (auto* entry = entries_.get(token)) {
    if ((*entry)->set.expiry_ms > now) {
      ++metrics_.hits;
      return {**entry, ""};
    }
    entries_.erase(token);  // expired entries are misses
  }

  auto fit = in_flight_.find(token);
  if (fit != in_flight_.end()) {
    auto flight = fit->second;
    flight->cv.wait(lk, [&] { return flight->done; });
    return flight->result;
  }

  auto flight = std::make_shared<InFlight>();
  in_flight_[token] = flight;
  ++metrics_.misses;
  lk.unlock();

  store::ResolveOutcome outcome;
  store::FetchOutcome fetched = store_.fetch(token);
  if (!fetched.ok) {
    outcome.skip_reason = fetched.code == store::StoreErrorCode::NotFound
                              ? "not-found"
                              : std::string(store::store_error_name(fetched.code));
  } else {
    try {
      cert::Certificate c = cert::decode_certificate(fetched.bytes);
      cert::ValidatedSet v = cert::verify_certificate(c, now);
      if (v.token != token) {
        // A store returning bytes under the wrong key is corruption.
        outcome.skip_reason = "token-mismatch";
      } else {
        outcome.set = std::move(v);
      }
    } catch (const cert::CertError& e) {
      outcome.skip_reason = std::string(cert::cert_error_name(e.code));
    }
  }

  lk.lock();
  if (outcome.set)
    entries_.put(token,
                 std::make_shared<const cert::ValidatedSet>(*outcome.set));
  flight->result = outcome;
  flight->done = true;
  in_flight_.erase(token);
  flight->cv.notify_all();
  return outcome;
}

void SetCache::invalidate(const cert::Token& token) {
  std::lock_guard lk(mu_);
  entries_.erase(token);
}

SetCacheMetrics SetCache::metrics() {
  std::lock_guard lk(mu_);
  SetCacheMetrics m = metrics_;
  m.evictions = entries_.evictions();
  return m;
}

}  // namespace safe::cache
