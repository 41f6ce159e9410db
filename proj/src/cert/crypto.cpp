#include "safe/cert/crypto.hpp"

#include <sodium.h>

#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>

namespace safe::cert {

namespace {

void ensure_sodium() {
  static std::once_flag once;
  std::call_once(once, [] {
    if (sodium_init() < 0) throw std::runtime_error("sodium_init failed");
  });
}

class Ed25519 final : public SignatureScheme {
 public:
  std::string id() const override { return "ed25519"; }

  KeyPair generate(const std::array<uint8_t, 32>* seed) const override {
    ensure_sodium();
    KeyPair kp;
    kp.scheme = id();
    kp.pub.resize(crypto_sign_PUBLICKEYBYTES);
    kp.secret.resize(crypto_sign_SECRETKEYBYTES);
    if (seed) {
      crypto_sign_seed_keypair(kp.pub.data(), kp.secret.data(), seed->data());
    } else {
      crypto_sign_keypair(kp.pub.data(), kp.secret.data());
    }
    return kp;
  }

  std::vector<uint8_t> sign(const KeyPair& key,
                            std::span<const uint8_t> msg) const override {
    ensure_sodium();
    if (key.secret.size() != crypto_sign_SECRETKEYBYTES)
      throw std::invalid_argument("bad ed25519 secret key size");
    std::vector<uint8_t> sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, msg.data(), msg.size(),
                         key.secret.data());
    return sig;
  }

  bool verify(std::span<const uint8_t> pub, std::span<const uint8_t> msg,
              std::span<const uint8_t> sig) const override {
    ensure_sodium();
    if (pub.size() != crypto_sign_PUBLICKEYBYTES ||
        sig.size() != crypto_sign_BYTES)
      return false;
    return crypto_sign_verify_detached(sig.data(), msg.data(), msg.size(),
                                       pub.data()) == 0;
  }
};

const Ed25519 kEd25519;

}  // namespace

const SignatureScheme* find_scheme(const std::string& id) {
  if (id == "ed25519") return &kEd25519;
  return nullptr;
}

KeyPair generate_keypair(const std::string& scheme) {
  const SignatureScheme* s = find_scheme(scheme);
  if (!s) throw std::invalid_argument("unknown signature scheme: " + scheme);
  return s->generate(nullptr);
}

KeyPair keypair_from_seed(const std::array<uint8_t, 32>& seed,
                          const std::string& scheme) {
  const SignatureScheme* s = find_scheme(scheme);
  if (!s) throw std::invalid_argument("unknown signature scheme: " + scheme);
  return s->generate(&seed);
}

Hash32 sha256(std::span<const uint8_t> data) {
  ensure_sodium();
  Hash32 out;
  crypto_hash_sha256(out.bytes.data(), data.data(), data.size());
  return out;
}

Hash32 sha256(std::string_view data) {
  return sha256(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(data.data()), data.size()));
}

std::string base64url_encode(std::span<const uint8_t> data) {
  ensure_sodium();
  std::string out;
  out.resize(sodium_base64_encoded_len(data.size(),
                                       sodium_base64_VARIANT_URLSAFE_NO_PADDING));
  sodium_bin2base64(out.data(), out.size(), data.data(), data.size(),
                    sodium_base64_VARIANT_URLSAFE_NO_PADDING);
  out.resize(out.find('\0') == std::string::npos ? out.size()
                                                 : out.find('\0'));
  return out;
}

std::optional<std::vector<uint8_t>> base64url_decode(std::string_view text) {
  ensure_sodium();
  std::vector<uint8_t> out(text.size() + 4);
  size_t len = 0;
  if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(),
                        nullptr, &len, nullptr,
                        sodium_base64_VARIANT_URLSAFE_NO_PADDING) != 0)
    return std::nullopt;
  out.resize(len);
  return out;
}

std::string Hash32::text() const { return base64url_encode(bytes); }

std::optional<Hash32> Hash32::parse(std::string_view b64) {
  auto bin = base64url_decode(b64);
  if (!bin || bin->size() != 32) return std::nullopt;
  Hash32 h;
  std::copy(bin->begin(), bin->end(), h.bytes.begin());
  return h;
}

GuidSource random_guid_source() {
  return [] {
    ensure_sodium();
    std::array<uint8_t, 16> g;
    randombytes_buf(g.data(), g.size());
    return g;
  };
}

GuidSource seeded_guid_source(uint64_t seed) {
  struct State {
    std::mutex mu;
    std::mt19937_64 rng;
  };
  auto state = std::make_shared<State>();
  state->rng.seed(seed);
  return [state] {
    std::lock_guard lk(state->mu);
    std::array<uint8_t, 16> g;
    for (size_t i = 0; i < 16; i += 8) {
      uint64_t v = state->rng();
      for (size_t j = 0; j < 8; ++j) g[i + j] = (v >> (8 * j)) & 0xff;
    }
    return g;
  };
}

std::string encode_keypair(const KeyPair& kp) {
  std::string out = "safe-key/1\n";
  out += "scheme: " + kp.scheme + "\n";
  out += "secret: " + base64url_encode(kp.secret) + "\n";
  out += "public: " + base64url_encode(kp.pub) + "\n";
  return out;
}

KeyPair decode_keypair(std::string_view text) {
  KeyPair kp;
  size_t pos = 0;
  auto line = [&]() -> std::string {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos)
      throw std::invalid_argument("truncated key file");
    std::string l(text.substr(pos, nl - pos));
    pos = nl + 1;
    return l;
  };
  if (line() != "safe-key/1") throw std::invalid_argument("bad key file header");
  auto field = [&](const std::string& name) {
    std::string l = line();
    if (l.rfind(name + ": ", 0) != 0)
      throw std::invalid_argument("bad key file field: expected " + name);
    return l.substr(name.size() + 2);
  };
  kp.scheme = field("scheme");
  auto sec = base64url_decode(field("secret"));
  auto pub = base64url_decode(field("public"));
  if (!sec || !pub) throw std::invalid_argument("bad key file encoding");
  kp.secret = *sec;
  kp.pub = *pub;
  if (!find_scheme(kp.scheme))
    throw std::invalid_argument("unknown scheme in key file: " + kp.scheme);
  return kp;
}

}  // namespace safe::cert
