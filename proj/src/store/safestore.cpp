#include "safe/store/safestore.hpp"

#include <fstream>
#include <sstream>
#include <unordered_map>

namespace safe::store {

namespace {

class MemoryBackend final : public Backend {
 public:
  std::optional<StoreRecord> get(const cert::Token& t) override {
    std::lock_guard lk(mu_);
    auto it = map_.find(t);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  void put(const cert::Token& t, StoreRecord rec) override {
    std::lock_guard lk(mu_);
    map_[t] = std::move(rec);
  }
  bool erase(const cert::Token& t) override {
    std::lock_guard lk(mu_);
    return map_.erase(t) > 0;
  }
  std::vector<cert::Token> tokens() override {
    std::lock_guard lk(mu_);
    std::vector<cert::Token> out;
    out.reserve(map_.size());
    for (const auto& [t, _] : map_) out.push_back(t);
    return out;
  }
  size_t size() override {
    std::lock_guard lk(mu_);
    return map_.size();
  }

 private:
  std::mutex mu_;
  std::unordered_map<cert::Token, StoreRecord> map_;
};

class FileBackend final : public Backend {
 public:
  explicit FileBackend(const std::string& path) : path_(path) { load(); }

  std::optional<StoreRecord> get(const cert::Token& t) override {
    std::lock_guard lk(mu_);
    auto it = map_.find(t);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }
  void put(const cert::Token& t, StoreRecord rec) override {
    std::lock_guard lk(mu_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << "PUT " << t.text() << ' ' << rec.issuer << ' ' << rec.expiry_ms
        << ' ' << rec.bytes.size() << '\n';
    out.write(rec.bytes.data(), static_cast<std::streamsize>(rec.bytes.size()));
    out << '\n';
    out.flush();
    map_[t] = std::move(rec);
  }
  bool erase(const cert::Token& t) override {
    std::lock_guard lk(mu_);
    if (!map_.erase(t)) return false;
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << "DEL " << t.text() << '\n';
    out.flush();
    return true;
  }
  std::vector<cert::Token> tokens() override {
    std::lock_guard lk(mu_);
    std::vector<cert::Token> out;
    for (const auto& [t, _] : map_) out.push_back(t);
    return out;
  }
  size_t size() override {
    std::lock_guard lk(mu_);
    return map_.size();
  }

 private:
  void load() {
    std::ifstream in(path_, std::ios::binary);
    if (!in.good()) return;  // fresh store
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (line.rfind("PUT ", 0) == 0) {
        // PUT <token> <issuer> <expiry> <len>
        std::istringstream hdr(line.substr(4));
        std::string tok, issuer;
        int64_t expiry;
        size_t len;
        if (!(hdr >> tok >> issuer >> expiry >> len))
          throw std::runtime_error("corrupt store log: bad PUT header");
        auto t = cert::Token::parse(tok);
        if (!t) throw std::runtime_error("corrupt store log: bad token");
        StoreRecord rec;
        rec.issuer = issuer;
        rec.expiry_ms = expiry;
        rec.bytes.resize(len);
        in.read(rec.bytes.data(), static_cast<std::streamsize>(len));
        if (static_cast<size_t>(in.gcount()) != len)
          throw std::runtime_error("corrupt store log: torn record");
        int nl = in.get();
        if (nl != '\n')
          throw std::runtime_error("corrupt store log: missing separator");
        map_[*t] = std::move(rec);
      } else if (line.rfind("DEL ", 0) == 0) {
        auto t = cert::Token::parse(line.substr(4));
        if (!t) throw std::runtime_error("corrupt store log: bad token");
        map_.erase(*t);
      } else {
        throw std::runtime_error("corrupt store log: unknown record");
      }
    }
  }

  std::string path_;
  std::mutex mu_;
  std::unordered_map<cert::Token, StoreRecord> map_;
};

}  // namespace

std::string_view store_error_name(StoreErrorCode c) {
  switch (c) {
    case StoreErrorCode::Ok: return "ok";
    case StoreErrorCode::TokenMismatch: return "token-mismatch";
    case StoreErrorCode::InvalidCertificate: return "invalid-certificate";
    case StoreErrorCode::ForeignOverwrite: return "foreign-overwrite";
    case StoreErrorCode::PayloadTooLarge: return "payload-too-large";
    case StoreErrorCode::NotFound: return "not-found";
    case StoreErrorCode::UnauthorizedDelete: return "unauthorized-delete";
    case StoreErrorCode::StaleDeleteTimestamp: return "stale-delete-timestamp";
    case StoreErrorCode::CorruptRecord: return "corrupt-record";
    case StoreErrorCode::Unavailable: return "unavailable";
  }
  return "?";
}

std::string SignedDeleteRequest::signing_payload() const {
  return "safe-delete/1\ntoken: " + token.text() +
         "\ntimestamp: " + std::to_string(timestamp_ms) + "\n";
}

SignedDeleteRequest make_delete_request(const cert::Token& token,
                                        int64_t now_ms,
                                        const cert::KeyPair& key) {
  SignedDeleteRequest req;
  req.token = token;
  req.timestamp_ms = now_ms;
  const cert::SignatureScheme* s = cert::find_scheme(key.scheme);
  if (!s) throw std::invalid_argument("unknown scheme: " + key.scheme);
  std::string payload = req.signing_payload();
  req.signature = s->sign(
      key, std::span<const uint8_t>(
               reinterpret_cast<const uint8_t*>(payload.data()), payload.size()));
  return req;
}

std::unique_ptr<Backend> make_memory_backend() {
  return std::make_unique<MemoryBackend>();
}

std::unique_ptr<Backend> make_file_backend(const std::string& path) {
  return std::make_unique<FileBackend>(path);
}

SafeStore::SafeStore(std::unique_ptr<Backend> backend, SafeStoreConfig config,
                     ClockFn clock)
    : backend_(std::move(backend)),
      config_(config),
      clock_(std::move(clock)) {}

PostOutcome SafeStore::post(const std::string& cert_bytes,
                            const std::optional<cert::Token>& expected) {
  PostOutcome out;
  if (cert_bytes.size() > config_.max_payload_bytes) {
    out.code = StoreErrorCode::PayloadTooLarge;
    out.message = "payload exceeds " +
                  std::to_string(config_.max_payload_bytes) + " bytes";
    return out;
  }
  cert::Certificate cert;
  try {
    cert = cert::decode_certificate(cert_bytes);
    cert::verify_certificate(cert, clock_());
  } catch (const cert::CertError& e) {
    out.code = StoreErrorCode::InvalidCertificate;
    out.cert_code = e.code;
    out.message = e.what();
    return out;
  }

  cert::Token computed = cert.token();
  if (expected && *expected != computed) {
    out.code = StoreErrorCode::TokenMismatch;
    out.message = "post target does not match the certificate's token";
    return out;
  }

  std::lock_guard lk(mu_);
  auto existing = backend_->get(computed);
  std::string issuer = cert.set.issuer.text();
  if (existing && existing->issuer != issuer) {
    out.code = StoreErrorCode::ForeignOverwrite;
    out.message = "record is owned by a different issuer";
    return out;
  }
  backend_->put(computed,
                StoreRecord{cert_bytes, issuer, cert.set.expiry_ms});
  out.ok = true;
  out.token = computed;
  return out;
}

FetchOutcome SafeStore::fetch(const cert::Token& token) {
  FetchOutcome out;
  auto rec = backend_->get(token);
  if (!rec) {
    out.code = StoreErrorCode::NotFound;
    return out;
  }
  out.ok = true;
  out.bytes = std::move(rec->bytes);
  return out;
}

DeleteOutcome SafeStore::remove(const cert::Token& token,
                                const SignedDeleteRequest& req) {
  DeleteOutcome out;
  if (req.token != token) {
    out.code = StoreErrorCode::UnauthorizedDelete;
    return out;
  }
  std::lock_guard lk(mu_);
  auto rec = backend_->get(token);
  if (!rec) {
    out.code = StoreErrorCode::NotFound;
    return out;
  }
  int64_t now = clock_();
  if (req.timestamp_ms < now - config_.delete_replay_window_ms ||
      req.timestamp_ms > now + config_.delete_replay_window_ms) {
    out.code = StoreErrorCode::StaleDeleteTimestamp;
    return out;
  }
  // The stored certificate embeds the issuer's key; the delete request must
  // verify under it.
  cert::Certificate cert;
  try {
    cert = cert::decode_certificate(rec->bytes);
  } catch (const cert::CertError&) {
    out.code = StoreErrorCode::CorruptRecord;
    return out;
  }
  const cert::SignatureScheme* scheme = cert::find_scheme(cert.scheme);
  std::string payload = req.signing_payload();
  if (!scheme ||
      !scheme->verify(cert.pubkey,
                      std::span<const uint8_t>(
                          reinterpret_cast<const uint8_t*>(payload.data()),
                          payload.size()),
                      req.signature)) {
    out.code = StoreErrorCode::UnauthorizedDelete;
    return out;
  }
  backend_->erase(token);
  out.ok = true;
  return out;
}

size_t SafeStore::sweep_expired() {
  std::lock_guard lk(mu_);
  int64_t now = clock_();
  size_t removed = 0;
  for (const auto& t : backend_->tokens()) {
    auto rec = backend_->get(t);
    if (rec && rec->expiry_ms <= now) {
      backend_->erase(t);
      ++removed;
    }
  }
  return removed;
}

size_t SafeStore::record_count() { return backend_->size(); }

}  // namespace safe::store
