#include "safe/cache/context_service.hpp"

#include <algorithm>
#include <set>

namespace safe::cache {

ContextService::ContextService(store::StoreClient& store,
                               std::shared_ptr<Clock> clock,
                               ContextServiceConfig config)
    : store_(store),
      clock_(clock),
      config_(config),
      set_cache_(store, clock, SetCacheConfig{config.set_capacity}),
      contexts_(config.context_capacity),
      jitter_rng_(config.jitter_seed ? config.jitter_seed
                                     : std::random_device{}()) {}

std::string ContextService::context_key(std::vector<cert::Token> roots) {
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  std::vector<uint8_t> buf;
  buf.reserve(roots.size() * 32);
  for (const auto& t : roots)
    buf.insert(buf.end(), t.h.bytes.begin(), t.h.bytes.end());
  return cert::sha256(buf).text();
}

AssembledContext ContextService::assemble(const std::vector<cert::Token>& roots) {
  if (roots.empty())
    throw AssembleError(AssembleErrorKind::AllRootsMissing, "no root tokens");
  std::string key = context_key(roots);
  int64_t now = clock_->now_ms();
  {
    std::lock_guard lk(mu_);
    if (auto* e = contexts_.get(key)) {
      if (e->earliest_expiry > now) {
        ++hits_;
        AssembledContext out;
        out.context = e->context;
        out.key = key;
        out.roots = e->roots;
        out.members = e->members;
        out.skipped = e->skipped;
        out.statement_count = e->statement_count;
        out.earliest_expiry = e->earliest_expiry;
        out.cache_hit = true;
        return out;
      }
      contexts_.erase(key);
    }
    ++misses_;
  }
  return build(roots, key);
}

AssembledContext ContextService::build(const std::vector<cert::Token>& roots,
                                       const std::string& key) {
  AssembledContext out;
  out.key = key;
  out.roots = roots;

  std::set<std::string> seen;
  std::vector<logic::Statement> statements;
  size_t missing_roots = 0;
  auto resolver = set_cache_.resolver();

  for (const auto& root : roots) {
    store::ClosureResult closure =
        store::fetch_closure(resolver, root, config_.closure);
    if (closure.root_missing) ++missing_roots;
    if (closure.truncated)
      throw AssembleError(AssembleErrorKind::LimitExceeded,
                          "closure limits exceeded under root " + root.text());
    for (auto& [t, reason] : closure.skipped)
      out.skipped.emplace_back(t, reason);
    for (auto& v : closure.sets) {
      if (!seen.insert(v.token.text()).second) continue;
      out.members.push_back(v.token);
      out.earliest_expiry = std::min(out.earliest_expiry, v.set.expiry_ms);
      for (const auto& st : v.set.statements) {
        if (statements.size() >= config_.closure.max_statements)
          throw AssembleError(AssembleErrorKind::LimitExceeded,
                              "context statement budget exceeded");
        statements.push_back(st);
      }
    }
  }
  if (missing_roots == roots.size())
    throw AssembleError(AssembleErrorKind::AllRootsMissing,
                        "no root token resolved");

  out.statement_count = statements.size();
  try {
    out.context = logic::build_context(
        std::move(statements),
        logic::ContextOptions{config_.secondary_index, out.earliest_expiry});
  } catch (const std::invalid_argument& e) {
    throw AssembleError(AssembleErrorKind::ContentError, e.what());
  }

  std::lock_guard lk(mu_);
  contexts_.put(key, Entry{out.context, out.roots, out.members, out.skipped,
                           out.statement_count, out.earliest_expiry});
  return out;
}

RefreshOutcome ContextService::refresh_on_failure(const AssembledContext& ctx) {
  int64_t now = clock_->now_ms();
  {
    std::lock_guard lk(mu_);
    auto it = throttle_.find(ctx.key);
    if (it != throttle_.end() && now < it->second) {
      ++throttled_;
      return {false, it->second - now, std::nullopt};
    }
    double span = config_.jitter_max - config_.jitter_min;
    double u = span <= 0 ? 0.0
                         : std::uniform_real_distribution<double>(0.0, span)(
                               jitter_rng_);
    int64_t delay = static_cast<int64_t>(
        static_cast<double>(config_.throttle_ms) * (config_.jitter_min + u));
    throttle_[ctx.key] = now + delay;
    if (throttle_.size() > 65536) throttle_.clear();  // crude bound
    ++refreshes_;
    contexts_.erase(ctx.key);
  }
  for (const auto& t : ctx.members) set_cache_.invalidate(t);

  RefreshOutcome out;
  out.refreshed = true;
  out.rebuilt = build(ctx.roots, ctx.key);
  return out;
}

void ContextService::invalidate_context(const std::string& key) {
  std::lock_guard lk(mu_);
  contexts_.erase(key);
}

ContextMetrics ContextService::metrics() {
  ContextMetrics m;
  {
    std::lock_guard lk(mu_);
    m.hits = hits_;
    m.misses = misses_;
    m.refreshes = refreshes_;
    m.throttled = throttled_;
  }
  m.sets = set_cache_.metrics();
  return m;
}

}  // namespace safe::cache
