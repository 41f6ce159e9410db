#include "safe/store/http.hpp"

#include <httplib.h>

#include <json.hpp>

namespace safe::store {

namespace {

using nlohmann::json;

constexpr const char* kCertContentType = "application/x-safe-certificate";

json error_body(const PostOutcome& out) {
  json j;
  j["error"] = std::string(store_error_name(out.code));
  if (out.cert_code) j["cert_error"] = std::string(cert_error_name(*out.cert_code));
  if (!out.message.empty()) j["message"] = out.message;
  return j;
}

StoreErrorCode parse_store_error(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(StoreErrorCode::Unavailable); ++i) {
    auto c = static_cast<StoreErrorCode>(i);
    if (name == store_error_name(c)) return c;
  }
  return StoreErrorCode::Unavailable;
}

std::optional<cert::CertErrorCode> parse_cert_error(const std::string& name) {
  for (int i = 0; i <= static_cast<int>(cert::CertErrorCode::StatementInvalid);
       ++i) {
    auto c = static_cast<cert::CertErrorCode>(i);
    if (name == cert::cert_error_name(c)) return c;
  }
  return std::nullopt;
}

}  // namespace

struct StoreHttpServer::Impl {
  httplib::Server srv;
};

StoreHttpServer::StoreHttpServer(SafeStore& store, std::string host, int port)
    : impl_(std::make_unique<Impl>()),
      store_(store),
      host_(std::move(host)),
      port_(port) {
  auto& srv = impl_->srv;

  srv.Put(R"(/sets/([A-Za-z0-9_\-]+))",
          [this](const httplib::Request& req, httplib::Response& res) {
            auto token = cert::Token::parse(req.matches[1].str());
            if (!token) {
              res.status = 400;
              res.set_content(json{{"error", "token-mismatch"},
                                   {"message", "unparseable token"}}
                                  .dump(),
                              "application/json");
              return;
            }
            PostOutcome out = store_.post(req.body, *token);
            if (out.ok) {
              res.set_content(json{{"token", out.token.text()}}.dump(),
                              "application/json");
              return;
            }
            res.status = out.code == StoreErrorCode::PayloadTooLarge ? 413 : 403;
            res.set_content(error_body(out).dump(), "application/json");
          });

  srv.Get(R"(/sets/([A-Za-z0-9_\-]+))",
          [this](const httplib::Request& req, httplib::Response& res) {
            auto token = cert::Token::parse(req.matches[1].str());
            if (!token) {
              res.status = 404;
              return;
            }
            FetchOutcome out = store_.fetch(*token);
            if (!out.ok) {
              res.status = 404;
              res.set_content(json{{"error", "not-found"}}.dump(),
                              "application/json");
              return;
            }
            res.set_content(out.bytes, kCertContentType);
          });

  srv.Delete(R"(/sets/([A-Za-z0-9_\-]+))",
             [this](const httplib::Request& req, httplib::Response& res) {
               auto token = cert::Token::parse(req.matches[1].str());
               if (!token) {
                 res.status = 404;
                 return;
               }
               SignedDeleteRequest del;
               del.token = *token;
               try {
                 del.timestamp_ms =
                     std::stoll(req.get_header_value("X-Safe-Timestamp"));
               } catch (...) {
                 res.status = 400;
                 res.set_content(json{{"error", "stale-delete-timestamp"}}.dump(),
                                 "application/json");
                 return;
               }
               auto sig = cert::base64url_decode(
                   req.get_header_value("X-Safe-Signature"));
               if (!sig) {
                 res.status = 403;
                 res.set_content(json{{"error", "unauthorized-delete"}}.dump(),
                                 "application/json");
                 return;
               }
               del.signature = *sig;
               DeleteOutcome out = store_.remove(*token, del);
               if (out.ok) {
                 res.set_content(json{{"deleted", token->text()}}.dump(),
                                 "application/json");
                 return;
               }
               res.status = out.code == StoreErrorCode::NotFound ? 404 : 403;
               res.set_content(
                   json{{"error", std::string(store_error_name(out.code))}}
                       .dump(),
                   "application/json");
             });

  srv.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(
        json{{"status", "ok"}, {"records", store_.record_count()}}.dump(),
        "application/json");
  });
}

StoreHttpServer::~StoreHttpServer() { stop(); }

int StoreHttpServer::start() {
  auto& srv = impl_->srv;
  if (port_ == 0) {
    port_ = srv.bind_to_any_port(host_);
  } else {
    if (!srv.bind_to_port(host_, port_))
      throw std::runtime_error("cannot bind " + host_ + ":" +
                               std::to_string(port_));
  }
  thread_ = std::thread([this] { impl_->srv.listen_after_bind(); });
  impl_->srv.wait_until_ready();
  return port_;
}

void StoreHttpServer::stop() {
  if (thread_.joinable()) {
    impl_->srv.stop();
    thread_.join();
  }
}

struct HttpStoreClient::Impl {
  explicit Impl(const std::string& url) : cli(url) {
    cli.set_connection_timeout(5);
    cli.set_read_timeout(30);
  }
  httplib::Client cli;
};

HttpStoreClient::HttpStoreClient(std::string base_url)
    : impl_(std::make_unique<Impl>(base_url)) {}

HttpStoreClient::~HttpStoreClient() = default;

PostOutcome HttpStoreClient::post(const std::string& cert_bytes,
                                  const std::optional<cert::Token>& expected) {
  PostOutcome out;
  cert::Token target;
  if (expected) {
    target = *expected;
  } else {
    try {
      target = cert::decode_certificate(cert_bytes).token();
    } catch (const cert::CertError& e) {
      out.code = StoreErrorCode::InvalidCertificate;
      out.cert_code = e.code;
      out.message = e.what();
      return out;
    }
  }
  auto res = impl_->cli.Put("/sets/" + target.text(), cert_bytes,
                            kCertContentType);
  if (!res) {
    out.code = StoreErrorCode::Unavailable;
    return out;
  }
  json body = json::parse(res->body, nullptr, false);
  if (res->status == 200) {
    out.ok = true;
    out.token = *cert::Token::parse(body["token"].get<std::string>());
    return out;
  }
  if (body.is_object() && body.contains("error"))
    out.code = parse_store_error(body["error"].get<std::string>());
  else
    out.code = StoreErrorCode::Unavailable;
  if (body.is_object() && body.contains("cert_error"))
    out.cert_code = parse_cert_error(body["cert_error"].get<std::string>());
  if (body.is_object() && body.contains("message"))
    out.message = body["message"].get<std::string>();
  return out;
}

FetchOutcome HttpStoreClient::fetch(const cert::Token& token) {
  FetchOutcome out;
  auto res = impl_->cli.Get("/sets/" + token.text());
  if (!res) {
    out.code = StoreErrorCode::Unavailable;
    return out;
  }
  if (res->status == 200) {
    out.ok = true;
    out.bytes = res->body;
    return out;
  }
  out.code = StoreErrorCode::NotFound;
  return out;
}

DeleteOutcome HttpStoreClient::remove(const cert::Token& token,
                                      const SignedDeleteRequest& req) {
  DeleteOutcome out;
  httplib::Headers headers = {
      {"X-Safe-Timestamp", std::to_string(req.timestamp_ms)},
      {"X-Safe-Signature", cert::base64url_encode(req.signature)},
  };
  auto res = impl_->cli.Delete("/sets/" + token.text(), headers);
  if (!res) {
    out.code = StoreErrorCode::Unavailable;
    return out;
  }
  if (res->status == 200) {
    out.ok = true;
    return out;
  }
  json body = json::parse(res->body, nullptr, false);
  out.code = body.is_object() && body.contains("error")
                 ? parse_store_error(body["error"].get<std::string>())
                 : StoreErrorCode::Unavailable;
  return out;
}

bool HttpStoreClient::health() {
  auto res = impl_->cli.Get("/health");
  return res && res->status == 200;
}

}  // namespace safe::store
