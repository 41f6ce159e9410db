#include "safe/cert/ids.hpp"

#include <stdexcept>

namespace safe::cert {

namespace {

const char* kHex = "0123456789abcdef";

}  // namespace

std::optional<PrincipalId> PrincipalId::parse(std::string_view b64) {
  auto h = Hash32::parse(b64);
  if (!h) return std::nullopt;
  return PrincipalId{*h};
}

std::optional<Token> Token::parse(std::string_view b64) {
  auto h = Hash32::parse(b64);
  if (!h) return std::nullopt;
  return Token{*h};
}

PrincipalId principal_id(const std::string& scheme,
                         std::span<const uint8_t> pub) {
  std::vector<uint8_t> buf;
  buf.reserve(scheme.size() + 1 + pub.size());
  buf.insert(buf.end(), scheme.begin(), scheme.end());
  buf.push_back(0x00);
  buf.insert(buf.end(), pub.begin(), pub.end());
  return PrincipalId{sha256(buf)};
}

PrincipalId principal_id(const KeyPair& kp) {
  return principal_id(kp.scheme, kp.pub);
}

Token make_token(const PrincipalId& issuer, std::string_view label) {
  if (label.size() > kMaxLabelBytes)
    throw std::invalid_argument("label exceeds " +
                                std::to_string(kMaxLabelBytes) + " bytes");
  if (label.empty()) return Token::of_principal(issuer);
  std::vector<uint8_t> buf;
  buf.reserve(32 + 1 + label.size());
  buf.insert(buf.end(), issuer.h.bytes.begin(), issuer.h.bytes.end());
  buf.push_back(0x00);
  buf.insert(buf.end(), label.begin(), label.end());
  return Token{sha256(buf)};
}

std::string Scid::text() const {
  std::string s = authority.text();
  s += ':';
  for (uint8_t b : guid) {
    s += kHex[b >> 4];
    s += kHex[b & 0xf];
  }
  return s;
}

std::optional<Scid> Scid::parse(std::string_view text) {
  if (text.size() != 43 + 1 + 32 || text[43] != ':') return std::nullopt;
  auto auth = PrincipalId::parse(text.substr(0, 43));
  if (!auth) return std::nullopt;
  Scid s;
  s.authority = *auth;
  auto hexval = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  for (size_t i = 0; i < 16; ++i) {
    int hi = hexval(text[44 + 2 * i]);
    int lo = hexval(text[44 + 2 * i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    s.guid[i] = static_cast<uint8_t>((hi << 4) | lo);
  }
  return s;
}

Scid new_scid(const PrincipalId& authority, const GuidSource& guids) {
  Scid s;
  s.authority = authority;
  s.guid = guids();
  return s;
}

}  // namespace safe::cert
