#pragma once

#include <optional>
#include <string>

#include "safe/cert/crypto.hpp"

namespace safe::cert {

// Hash of the principal's canonical public-key encoding; the principal's
// unique logical name.
struct PrincipalId {
  Hash32 h;

  std::string text() const { return h.text(); }
  static std::optional<PrincipalId> parse(std::string_view b64);

  bool operator==(const PrincipalId& o) const { return h == o.h; }
  bool operator!=(const PrincipalId& o) const { return !(*this == o); }
  bool operator<(const PrincipalId& o) const { return h < o.h; }
};

// Self-certifying reference to a logic set: hash of (issuer, label); equal to
// the issuer's PrincipalId when the label is empty (the ID-set convention).
struct Token {
  Hash32 h;

  std::string text() const { return h.text(); }
  static std::optional<Token> parse(std::string_view b64);
  static Token of_principal(const PrincipalId& p) { return Token{p.h}; }

  bool operator==(const Token& o) const { return h == o.h; }
  bool operator!=(const Token& o) const { return !(*this == o); }
  bool operator<(const Token& o) const { return h < o.h; }
};

// Canonical key encoding is scheme-id ‖ 0x00 ‖ key bytes; the principalID is
// its SHA-256.
PrincipalId principal_id(const std::string& scheme,
                         std::span<const uint8_t> pub);
PrincipalId principal_id(const KeyPair& kp);

constexpr size_t kMaxLabelBytes = 4096;

// Token(issuer, "") = issuer; otherwise SHA-256(issuer ‖ 0x00 ‖ label).
// Throws std::invalid_argument for labels over kMaxLabelBytes.
Token make_token(const PrincipalId& issuer, std::string_view label);

// Self-certifying object id: controlling principal + 128-bit guid, rendered
// `<principalID>:<32 hex>`.
struct Scid {
  PrincipalId authority;
  std::array<uint8_t, 16> guid{};

  std::string text() const;
  static std::optional<Scid> parse(std::string_view text);

  bool operator==(const Scid& o) const {
    return authority == o.authority && guid == o.guid;
  }
};

Scid new_scid(const PrincipalId& authority, const GuidSource& guids);
inline PrincipalId root_id(const Scid& s) { return s.authority; }

}  // namespace safe::cert

template <>
struct std::hash<safe::cert::Token> {
  size_t operator()(const safe::cert::Token& t) const {
    size_t h;
    static_assert(sizeof(h) <= 32);
    __builtin_memcpy(&h, t.h.bytes.data(), sizeof(h));
    return h;
  }
};

template <>
struct std::hash<safe::cert::PrincipalId> {
  size_t operator()(const safe::cert::PrincipalId& p) const {
    size_t h;
    __builtin_memcpy(&h, p.h.bytes.data(), sizeof(h));
    return h;
  }
};
