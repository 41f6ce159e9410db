#pragma once

#include <memory>
#include <string>
#include <thread>

#include "safe/store/safestore.hpp"

namespace safe::store {

// REST front for a SafeStore:
//   PUT    /sets/{token}   body = certificate bytes
//   GET    /sets/{token}
//   DELETE /sets/{token}   X-Safe-Timestamp / X-Safe-Signature headers
//   GET    /health
class StoreHttpServer {
 public:
  StoreHttpServer(SafeStore& store, std::string host, int port);
  ~StoreHttpServer();

  // Binds (picking a free port when port == 0) and serves on a background
  // thread. Returns the bound port.
  int start();
  void stop();
  int port() const { return port_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  SafeStore& store_;
  std::string host_;
  int port_;
  std::thread thread_;
};

// StoreClient over the REST API.
class HttpStoreClient : public StoreClient {
 public:
  // base_url like "http://127.0.0.1:7777"
  explicit HttpStoreClient(std::string base_url);
  ~HttpStoreClient() override;

  PostOutcome post(const std::string& cert_bytes,
                   const std::optional<cert::Token>& expected) override;
  FetchOutcome fetch(const cert::Token& token) override;
  DeleteOutcome remove(const cert::Token& token,
                       const SignedDeleteRequest& req) override;
  bool health() override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace safe::store
