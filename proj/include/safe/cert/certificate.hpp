#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "safe/cert/ids.hpp"
#include "safe/logic/atom.hpp"

namespace safe::cert {

enum class CertErrorCode : uint8_t {
  DecodeFailure,
  UnknownVersion,
  UnknownScheme,
  NonCanonical,
  BadSignature,
  KeyIssuerMismatch,
  SpeakerMismatch,
  Expired,
  NotYetValid,
  InvalidWindow,
  LabelTooLong,
  StatementInvalid,
};

std::string_view cert_error_name(CertErrorCode c);

struct CertError : std::runtime_error {
  CertError(CertErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(cert_error_name(code)) + ": " + msg),
        code(code) {}
  CertErrorCode code;
};

// The semantic content of a certificate: a labeled, signed, link-bearing
// set of statements.
struct LogicSet {
  std::string label;
  PrincipalId issuer;
  std::vector<logic::Statement> statements;
  std::vector<Token> links;
  int64_t issued_ms = 0;
  int64_t expiry_ms = 0;
};

struct Certificate {
  LogicSet set;
  std::string scheme;
  std::vector<uint8_t> pubkey;
  std::vector<uint8_t> signature;

  Token token() const { return make_token(set.issuer, set.label); }
  // Canonical payload text; the signature covers exactly these bytes.
  std::string payload() const;
};

// A verified certificate ready for context assembly; statement origins carry
// the set token.
struct ValidatedSet {
  Token token;
  LogicSet set;
  std::string scheme;
  std::vector<uint8_t> pubkey;

  size_t statement_count() const { return set.statements.size(); }
};

// Resolves $Self placeholders to the keypair's principal, checks that every
// statement head speaks as the issuer, and signs the canonical payload.
// Throws CertError (SpeakerMismatch, InvalidWindow, LabelTooLong).
Certificate build_and_sign(const std::string& label,
                           std::vector<logic::Statement> statements,
                           std::vector<Token> links, int64_t issued_ms,
                           int64_t expiry_ms, const KeyPair& key);

// Full validation: signature over payload bytes, key-hash/issuer match,
// speaker-issuer match on every statement, now within [issued, expiry).
ValidatedSet verify_certificate(const Certificate& cert, int64_t now_ms);

// Canonical, deterministic encoding; decode(encode(c)) == c and decode
// rejects truncated, unknown-version, and non-canonical inputs.
std::string encode_certificate(const Certificate& cert);
Certificate decode_certificate(std::string_view bytes);

// PEM-like text armor for CLI interchange.
std::string armor_certificate(const Certificate& cert);
Certificate dearmor_certificate(std::string_view text);

}  // namespace safe::cert
