#pragma once

#include <atomic>
#include <cstdint>
#include <optional>
#include <string>

#include "safe/cert/certificate.hpp"

namespace safe::store {

enum class StoreErrorCode : uint8_t {
  Ok,
  TokenMismatch,       // post target differs from the recomputed token
  InvalidCertificate,  // decode/verify failed; cert_code has the detail
  ForeignOverwrite,    // existing record owned by a different issuer
  PayloadTooLarge,
  NotFound,
  UnauthorizedDelete,
  StaleDeleteTimestamp,
  CorruptRecord,
  Unavailable,
};

std::string_view store_error_name(StoreErrorCode c);

struct PostOutcome {
  bool ok = false;
  StoreErrorCode code = StoreErrorCode::Ok;
  std::optional<cert::CertErrorCode> cert_code;
  cert::Token token;
  std::string message;
};

struct FetchOutcome {
  bool ok = false;
  StoreErrorCode code = StoreErrorCode::Ok;
  std::string bytes;
};

struct DeleteOutcome {
  bool ok = false;
  StoreErrorCode code = StoreErrorCode::Ok;
};

// Early-revocation request, signed by the record's issuer over the canonical
// delete payload; the timestamp bounds replays.
struct SignedDeleteRequest {
  cert::Token token;
  int64_t timestamp_ms = 0;
  std::vector<uint8_t> signature;

  std::string signing_payload() const;
};

SignedDeleteRequest make_delete_request(const cert::Token& token,
                                        int64_t now_ms,
                                        const cert::KeyPair& key);

// Client view of a certificate store. Implementations: the in-process
// SafeStore service and the HTTP remote client.
class StoreClient {
 public:
  virtual ~StoreClient() = default;

  // `expected` pins the target token (the HTTP path token); posts whose
  // recomputed token differs are rejected either way.
  virtual PostOutcome post(const std::string& cert_bytes,
                           const std::optional<cert::Token>& expected) = 0;
  virtual FetchOutcome fetch(const cert::Token& token) = 0;
  virtual DeleteOutcome remove(const cert::Token& token,
                               const SignedDeleteRequest& req) = 0;
  virtual bool health() = 0;
};

// Decorator counting round-trips; the cache layers assert warm-path
// behavior against these counters.
class CountingStore : public StoreClient {
 public:
  explicit CountingStore(StoreClient& inner) : inner_(inner) {}

  PostOutcome post(const std::string& bytes,
                   const std::optional<cert::Token>& expected) override {
    posts_.fetch_add(1, std::memory_order_relaxed);
    return inner_.post(bytes, expected);
  }
  FetchOutcome fetch(const cert::Token& token) override {
    fetches_.fetch_add(1, std::memory_order_relaxed);
    return inner_.fetch(token);
  }
  DeleteOutcome remove(const cert::Token& token,
                       const SignedDeleteRequest& req) override {
    return inner_.remove(token, req);
  }
  bool health() override { return inner_.health(); }

  uint64_t fetches() const { return fetches_.load(std::memory_order_relaxed); }
  uint64_t posts() const { return posts_.load(std::memory_order_relaxed); }
  void reset() {
    fetches_ = 0;
    posts_ = 0;
  }

 private:
  StoreClient& inner_;
  std::atomic<uint64_t> fetches_{0};
  std::atomic<uint64_t> posts_{0};
};

}  // namespace safe::store
