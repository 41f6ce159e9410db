#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace safe::cert {

struct Hash32 {
  std::array<uint8_t, 32> bytes{};

  std::string text() const;  // base64url, no padding (43 chars)
  static std::optional<Hash32> parse(std::string_view b64);

  bool operator==(const Hash32& o) const { return bytes == o.bytes; }
  bool operator!=(const Hash32& o) const { return !(*this == o); }
  bool operator<(const Hash32& o) const { return bytes < o.bytes; }
};

Hash32 sha256(std::span<const uint8_t> data);
Hash32 sha256(std::string_view data);

std::string base64url_encode(std::span<const uint8_t> data);
std::optional<std::vector<uint8_t>> base64url_decode(std::string_view text);

struct KeyPair {
  std::string scheme;
  std::vector<uint8_t> pub;
  std::vector<uint8_t> secret;
};

// Pluggable signature scheme, identified by a short id embedded in
// certificates. Ed25519 is registered by default.
class SignatureScheme {
 public:
  virtual ~SignatureScheme() = default;
  virtual std::string id() const = 0;
  // Deterministic when a 32-byte seed is supplied.
  virtual KeyPair generate(const std::array<uint8_t, 32>* seed) const = 0;
  virtual std::vector<uint8_t> sign(const KeyPair& key,
                                    std::span<const uint8_t> msg) const = 0;
  virtual bool verify(std::span<const uint8_t> pub,
                      std::span<const uint8_t> msg,
                      std::span<const uint8_t> sig) const = 0;
};

// nullptr when the scheme id is unknown.
const SignatureScheme* find_scheme(const std::string& id);

KeyPair generate_keypair(const std::string& scheme = "ed25519");
KeyPair keypair_from_seed(const std::array<uint8_t, 32>& seed,
                          const std::string& scheme = "ed25519");

// 128-bit unique-id source; injectable for reproducible fixtures.
using GuidSource = std::function<std::array<uint8_t, 16>()>;
GuidSource random_guid_source();
GuidSource seeded_guid_source(uint64_t seed);

// Key file serialization (text, versioned).
std::string encode_keypair(const KeyPair& kp);
KeyPair decode_keypair(std::string_view text);

}  // namespace safe::cert
