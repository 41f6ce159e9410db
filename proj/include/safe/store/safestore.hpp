#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include "safe/store/store.hpp"

namespace safe::store {

struct StoreRecord {
  std::string bytes;
  std::string issuer;  // principalID text
  int64_t expiry_ms = 0;
};

// Dumb token -> record KV; all trust checks live in SafeStore.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::optional<StoreRecord> get(const cert::Token& t) = 0;
  virtual void put(const cert::Token& t, StoreRecord rec) = 0;
  virtual bool erase(const cert::Token& t) = 0;
  virtual std::vector<cert::Token> tokens() = 0;
  virtual size_t size() = 0;
};

std::unique_ptr<Backend> make_memory_backend();

// Single-file append log (PUT/DEL records) with an in-memory index; rebuilt
// on open. Throws std::runtime_error on a corrupt log.
std::unique_ptr<Backend> make_file_backend(const std::string& path);

struct SafeStoreConfig {
  size_t max_payload_bytes = 1 << 20;
  int64_t delete_replay_window_ms = 300'000;
};

using ClockFn = std::function<int64_t()>;  // ms since epoch

// The certificate store service: a KV store with the write-authorization
// check. Posts are stored only if the certificate verifies, the recomputed
// token matches, and any existing record belongs to the same issuer. Fetch
// returns bytes verbatim; expiry filtering is the validating client's job.
class SafeStore : public StoreClient {
 public:
  SafeStore(std::unique_ptr<Backend> backend, SafeStoreConfig config,
            ClockFn clock);

  PostOutcome post(const std::string& cert_bytes,
                   const std::optional<cert::Token>& expected) override;
  FetchOutcome fetch(const cert::Token& token) override;
  DeleteOutcome remove(const cert::Token& token,
                       const SignedDeleteRequest& req) override;
  bool health() override { return true; }

  // Lazy reclamation of expired records; returns the number removed.
  size_t sweep_expired();
  size_t record_count();

 private:
  std::unique_ptr<Backend> backend_;
  SafeStoreConfig config_;
  ClockFn clock_;
  std::mutex mu_;
};

}  // namespace safe::store
