#include "safe/cert/certificate.hpp"

#include <algorithm>

#include "safe/logic/parser.hpp"

namespace safe::cert {

namespace {

constexpr std::string_view kVersionLine = "safe-cert/1";

// Deterministic label escaping: control bytes, '%', and DEL become %XX
// (uppercase hex); everything else is literal.
std::string escape_label(std::string_view raw) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : raw) {
    if (c < 0x20 || c == '%' || c == 0x7f) {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xf];
    } else {
      out += static_cast<char>(c);
    }
  }
  return out;
}

std::optional<std::string> unescape_label(std::string_view esc) {
  std::string out;
  for (size_t i = 0; i < esc.size(); ++i) {
    if (esc[i] != '%') {
      out += esc[i];
      continue;
    }
    if (i + 2 >= esc.size()) return std::nullopt;
    auto hexval = [](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      return -1;
    };
    int hi = hexval(esc[i + 1]), lo = hexval(esc[i + 2]);
    if (hi < 0 || lo < 0) return std::nullopt;
    out += static_cast<char>((hi << 4) | lo);
    i += 2;
  }
  return out;
}

logic::Term issuer_term(const PrincipalId& p) {
  return logic::Term::principal(p.text());
}

// Replaces $Self placeholders (speakers and arguments) with the issuer.
logic::Statement resolve_self(const logic::Statement& st,
                              const logic::Term& self) {
  auto fix_term = [&](const logic::Term& t) {
    return t.kind() == logic::TermKind::SelfRef ? self : t;
  };
  auto fix_atom = [&](const logic::Atom& a) {
    logic::Atom out;
    out.predicate = a.predicate;
    out.speaker = fix_term(a.speaker);
    for (const auto& arg : a.args) out.args.push_back(fix_term(arg));
    return out;
  };
  logic::Statement out;
  out.head = fix_atom(st.head);
  for (const auto& b : st.body) out.body.push_back(fix_atom(b));
  out.origin = st.origin;
  return out;
}

struct LineReader {
  std::string_view text;
  size_t pos = 0;

  std::string_view line() {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos)
      throw CertError(CertErrorCode::DecodeFailure, "truncated certificate");
    auto l = text.substr(pos, nl - pos);
    pos = nl + 1;
    return l;
  }

  std::string_view field(std::string_view name) {
    auto l = line();
    if (l.size() < name.size() + 2 || l.substr(0, name.size()) != name ||
        l.substr(name.size(), 2) != ": ")
      throw CertError(CertErrorCode::DecodeFailure,
                      "expected field '" + std::string(name) + "'");
    return l.substr(name.size() + 2);
  }
};

int64_t parse_ms(std::string_view s) {
  if (s.empty()) throw CertError(CertErrorCode::DecodeFailure, "empty timestamp");
  int64_t v = 0;
  for (char c : s) {
    if (c < '0' || c > '9')
      throw CertError(CertErrorCode::DecodeFailure, "bad timestamp");
    v = v * 10 + (c - '0');
  }
  return v;
}

size_t parse_count(std::string_view s) {
  return static_cast<size_t>(parse_ms(s));
}

}  // namespace

std::string_view cert_error_name(CertErrorCode c) {
  switch (c) {
    case CertErrorCode::DecodeFailure: return "decode-failure";
    case CertErrorCode::UnknownVersion: return "unknown-version";
    case CertErrorCode::UnknownScheme: return "unknown-scheme";
    case CertErrorCode::NonCanonical: return "non-canonical";
    case CertErrorCode::BadSignature: return "bad-signature";
    case CertErrorCode::KeyIssuerMismatch: return "key-issuer-mismatch";
    case CertErrorCode::SpeakerMismatch: return "speaker-mismatch";
    case CertErrorCode::Expired: return "expired";
    case CertErrorCode::NotYetValid: return "not-yet-valid";
    case CertErrorCode::InvalidWindow: return "invalid-window";
    case CertErrorCode::LabelTooLong: return "label-too-long";
    case CertErrorCode::StatementInvalid: return "statement-invalid";
  }
  return "?";
}

std::string Certificate::payload() const {
  std::string out(kVersionLine);
  out += '\n';
  out += "scheme: " + scheme + "\n";
  out += "issuer: " + set.issuer.text() + "\n";
  out += "pubkey: " + base64url_encode(pubkey) + "\n";
  out += "label: " + escape_label(set.label) + "\n";
  out += "issued: " + std::to_string(set.issued_ms) + "\n";
  out += "expiry: " + std::to_string(set.expiry_ms) + "\n";
  out += "links: " + std::to_string(set.links.size()) + "\n";
  for (const auto& l : set.links) out += l.text() + "\n";
  out += "statements: " + std::to_string(set.statements.size()) + "\n";
  for (const auto& st : set.statements) out += st.text() + "\n";
  return out;
}

Certificate build_and_sign(const std::string& label,
                           std::vector<logic::Statement> statements,
                           std::vector<Token> links, int64_t issued_ms,
                           int64_t expiry_ms, const KeyPair& key) {
  if (label.size() > kMaxLabelBytes)
    throw CertError(CertErrorCode::LabelTooLong,
                    std::to_string(label.size()) + " bytes");
  if (issued_ms >= expiry_ms)
    throw CertError(CertErrorCode::InvalidWindow, "issued >= expiry");
  const SignatureScheme* scheme = find_scheme(key.scheme);
  if (!scheme)
    throw CertError(CertErrorCode::UnknownScheme, key.scheme);

  Certificate cert;
  cert.scheme = key.scheme;
  cert.pubkey = key.pub;
  cert.set.label = label;
  cert.set.issuer = principal_id(key);
  cert.set.issued_ms = issued_ms;
  cert.set.expiry_ms = expiry_ms;
  cert.set.links = std::move(links);

  logic::Term self = issuer_term(cert.set.issuer);
  for (auto& st : statements) {
    logic::Statement resolved = resolve_self(st, self);
    if (resolved.head.speaker != self)
      throw CertError(CertErrorCode::SpeakerMismatch,
                      "statement head must speak as the issuer: " +
                          resolved.head.text());
    cert.set.statements.push_back(std::move(resolved));
  }

  std::string payload = cert.payload();
  cert.signature = scheme->sign(
      key, std::span<const uint8_t>(
               reinterpret_cast<const uint8_t*>(payload.data()), payload.size()));
  return cert;
}

ValidatedSet verify_certificate(const Certificate& cert, int64_t now_ms) {
  const SignatureScheme* scheme = find_scheme(cert.scheme);
  if (!scheme) throw CertError(CertErrorCode::UnknownScheme, cert.scheme);

  if (principal_id(cert.scheme, cert.pubkey) != cert.set.issuer)
    throw CertError(CertErrorCode::KeyIssuerMismatch,
                    "issuer is not the hash of the embedded key");

  std::string payload = cert.payload();
  if (!scheme->verify(
          cert.pubkey,
          std::span<const uint8_t>(
              reinterpret_cast<const uint8_t*>(payload.data()), payload.size()),
          cert.signature))
    throw CertError(CertErrorCode::BadSignature, "signature does not verify");

  logic::Term self = issuer_term(cert.set.issuer);
  for (const auto& st : cert.set.statements) {
    if (st.head.speaker != self)
      throw CertError(CertErrorCode::SpeakerMismatch, st.head.text());
    auto has_selfref = [](const logic::Atom& a) {
      if (a.speaker.kind() == logic::TermKind::SelfRef) return true;
      for (const auto& t : a.args)
        if (t.kind() == logic::TermKind::SelfRef) return true;
      return false;
    };
    for (const auto& b : st.body)
      if (has_selfref(b))
        throw CertError(CertErrorCode::SpeakerMismatch,
                        "unresolved $Self in signed statement: " + st.text());
  }

  if (cert.set.issued_ms >= cert.set.expiry_ms)
    throw CertError(CertErrorCode::InvalidWindow, "issued >= expiry");
  if (now_ms < cert.set.issued_ms)
    throw CertError(CertErrorCode::NotYetValid, "certificate not yet valid");
  if (now_ms >= cert.set.expiry_ms)
    throw CertError(CertErrorCode::Expired, "certificate expired");

  ValidatedSet v;
  v.token = cert.token();
  v.set = cert.set;
  v.scheme = cert.scheme;
  v.pubkey = cert.pubkey;
  std::string origin = v.token.text();
  for (auto& st : v.set.statements) st.origin = origin;
  return v;
}

std::string encode_certificate(const Certificate& cert) {
  return cert.payload() + "signature: " + base64url_encode(cert.signature) +
         "\n";
}

Certificate decode_certificate(std::string_view bytes) {
  LineReader r{bytes};
  auto version = r.line();
  if (version.rfind("safe-cert/", 0) != 0)
    throw CertError(CertErrorCode::DecodeFailure, "missing version line");
  if (version != kVersionLine)
    throw CertError(CertErrorCode::UnknownVersion, std::string(version));

  Certificate cert;
  cert.scheme = std::string(r.field("scheme"));

  auto issuer = PrincipalId::parse(r.field("issuer"));
  if (!issuer) throw CertError(CertErrorCode::DecodeFailure, "bad issuer");
  cert.set.issuer = *issuer;

  auto pub = base64url_decode(r.field("pubkey"));
  if (!pub) throw CertError(CertErrorCode::DecodeFailure, "bad pubkey");
  cert.pubkey = *pub;

  auto label = unescape_label(r.field("label"));
  if (!label || label->size() > kMaxLabelBytes)
    throw CertError(CertErrorCode::DecodeFailure, "bad label");
  cert.set.label = *label;

  cert.set.issued_ms = parse_ms(r.field("issued"));
  cert.set.expiry_ms = parse_ms(r.field("expiry"));

  size_t nlinks = parse_count(r.field("links"));
  if (nlinks > 100000)
    throw CertError(CertErrorCode::DecodeFailure, "absurd link count");
  for (size_t i = 0; i < nlinks; ++i) {
    auto t = Token::parse(r.line());
    if (!t) throw CertError(CertErrorCode::DecodeFailure, "bad link token");
    cert.set.links.push_back(*t);
  }

  size_t nstmts = parse_count(r.field("statements"));
  if (nstmts > 1000000)
    throw CertError(CertErrorCode::DecodeFailure, "absurd statement count");
  for (size_t i = 0; i < nstmts; ++i) {
    auto l = r.line();
    try {
      auto parsed = logic::parse_program(l);
      if (parsed.size() != 1)
        throw CertError(CertErrorCode::StatementInvalid,
                        "expected one statement per line");
      cert.set.statements.push_back(std::move(parsed[0]));
    } catch (const logic::ParseError& e) {
      throw CertError(CertErrorCode::StatementInvalid, e.what());
    }
  }

  auto sig = base64url_decode(r.field("signature"));
  if (!sig) throw CertError(CertErrorCode::DecodeFailure, "bad signature field");
  cert.signature = *sig;

  if (r.pos != bytes.size())
    throw CertError(CertErrorCode::NonCanonical, "trailing bytes");
  if (encode_certificate(cert) != bytes)
    throw CertError(CertErrorCode::NonCanonical,
                    "input is not the canonical encoding");
  return cert;
}

std::string armor_certificate(const Certificate& cert) {
  std::string body = encode_certificate(cert);
  std::string b64 = base64url_encode(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(body.data()), body.size()));
  std::string out = "-----BEGIN SAFE CERTIFICATE-----\n";
  for (size_t i = 0; i < b64.size(); i += 64) {
    out += b64.substr(i, 64);
    out += '\n';
  }
  out += "-----END SAFE CERTIFICATE-----\n";
  return out;
}

Certificate dearmor_certificate(std::string_view text) {
  auto begin = text.find("-----BEGIN SAFE CERTIFICATE-----");
  auto end = text.find("-----END SAFE CERTIFICATE-----");
  if (begin == std::string_view::npos || end == std::string_view::npos ||
      end <= begin)
    throw CertError(CertErrorCode::DecodeFailure, "missing armor markers");
  std::string b64;
  for (char c : text.substr(begin + 32, end - begin - 32))
    if (!isspace(static_cast<unsigned char>(c))) b64 += c;
  auto bin = base64url_decode(b64);
  if (!bin) throw CertError(CertErrorCode::DecodeFailure, "bad armor body");
  return decode_certificate(
      std::string_view(reinterpret_cast<const char*>(bin->data()), bin->size()));
}

}  // namespace safe::cert
