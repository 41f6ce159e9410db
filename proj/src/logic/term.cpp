#include "safe/logic/term.hpp"

#include <cctype>
#include <charconv>
#include <stdexcept>

#include "safe/logic/ipv4.hpp"

namespace safe::logic {

namespace {

bool is_base64url_char(char c) {
  return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
         (c >= '0' && c <= '9') || c == '-' || c == '_';
}

// 32 bytes encode to 43 base64url characters without padding.
bool looks_like_principal(std::string_view s) {
  if (s.size() != 43) return false;
  for (char c : s)
    if (!is_base64url_char(c)) return false;
  return true;
}

bool is_hex(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
}

// <principal>:<32 lowercase hex digits>
bool looks_like_scid(std::string_view s) {
  if (s.size() != 43 + 1 + 32) return false;
  if (!looks_like_principal(s.substr(0, 43))) return false;
  if (s[43] != ':') return false;
  for (char c : s.substr(44))
    if (!is_hex(c)) return false;
  return true;
}

bool looks_like_number(std::string_view s) {
  if (s.empty()) return false;
  size_t i = s[0] == '-' ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

bool looks_like_ipv4(std::string_view s) {
  int dots = 0;
  bool slash = false;
  for (char c : s) {
    if (c == '.') {
      ++dots;
    } else if (c == '/') {
      slash = true;
    } else if (!std::isdigit(static_cast<unsigned char>(c))) {
      return false;
    }
  }
  return dots == 3 && slash;
}

bool pathname_component_char(char c) {
  return is_base64url_char(c) || c == '.';
}

// Pathname: [root ':'] component {'/' component}. Components are nonempty
// runs of symbol characters; at most one ':' (after the root).
bool validate_pathname(std::string_view s) {
  auto colon = s.find(':');
  std::string_view rest = s;
  if (colon != std::string_view::npos) {
    if (colon == 0) return false;
    for (char c : s.substr(0, colon))
      if (!pathname_component_char(c)) return false;
    rest = s.substr(colon + 1);
    if (rest.find(':') != std::string_view::npos) return false;
  }
  if (rest.empty()) return false;
  size_t start = 0;
  while (true) {
    auto slash = rest.find('/', start);
    auto comp = slash == std::string_view::npos ? rest.substr(start)
                                                : rest.substr(start, slash - start);
    if (comp.empty()) return false;
    for (char c : comp)
      if (!pathname_component_char(c)) return false;
    if (slash == std::string_view::npos) break;
    start = slash + 1;
  }
  return true;
}

}  // namespace

std::string_view term_kind_name(TermKind k) {
  switch (k) {
    case TermKind::Variable: return "variable";
    case TermKind::String: return "string";
    case TermKind::Number: return "number";
    case TermKind::Principal: return "principalID";
    case TermKind::Scid: return "scid";
    case TermKind::Pathname: return "pathname";
    case TermKind::Ipv4Prefix: return "ipv4-prefix";
    case TermKind::SelfRef: return "$Self";
  }
  return "?";
}

Term Term::variable(std::string name) {
  Term t;
  t.kind_ = TermKind::Variable;
  t.text_ = std::move(name);
  return t;
}

Term Term::string(std::string value) {
  Term t;
  t.kind_ = TermKind::String;
  t.text_ = std::move(value);
  return t;
}

Term Term::number(int64_t value) {
  Term t;
  t.kind_ = TermKind::Number;
  t.text_ = std::to_string(value);
  t.number_ = value;
  return t;
}

Term Term::principal(std::string base64url) {
  if (!looks_like_principal(base64url))
    throw std::invalid_argument("malformed principalID: " + base64url);
  Term t;
  t.kind_ = TermKind::Principal;
  t.text_ = std::move(base64url);
  return t;
}

Term Term::scid(std::string text) {
  if (!looks_like_scid(text))
    throw std::invalid_argument("malformed scid: " + text);
  Term t;
  t.kind_ = TermKind::Scid;
  t.text_ = std::move(text);
  return t;
}

Term Term::pathname(std::string text) {
  if (!validate_pathname(text))
    throw std::invalid_argument("malformed pathname: " + text);
  Term t;
  t.kind_ = TermKind::Pathname;
  t.text_ = std::move(text);
  return t;
}

Term Term::ipv4_prefix(std::string text) {
  auto p = parse_ipv4_prefix(text);
  if (!p) throw std::invalid_argument("malformed ipv4 prefix: " + text);
  Term t;
  t.kind_ = TermKind::Ipv4Prefix;
  t.text_ = p->text();  // normalized
  return t;
}

Term Term::self_ref() {
  Term t;
  t.kind_ = TermKind::SelfRef;
  t.text_ = "$Self";
  return t;
}

Term Term::classify_symbol(const std::string& symbol) {
  if (looks_like_number(symbol)) {
    int64_t v = 0;
    auto [p, ec] = std::from_chars(symbol.data(), symbol.data() + symbol.size(), v);
    if (ec != std::errc() || p != symbol.data() + symbol.size())
      throw std::invalid_argument("integer out of 64-bit range: " + symbol);
    return number(v);
  }
  if (looks_like_ipv4(symbol)) return ipv4_prefix(symbol);
  if (looks_like_principal(symbol)) return principal(symbol);
  if (looks_like_scid(symbol)) return scid(symbol);
  if (symbol.find('/') != std::string::npos ||
      symbol.find(':') != std::string::npos)
    return pathname(symbol);
  return string(symbol);
}

std::string quote_string(std::string_view raw) {
  std::string out = "\"";
  for (unsigned char c : raw) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          static const char* hex = "0123456789abcdef";
          out += "\\x";
          out += hex[c >> 4];
          out += hex[c & 0xf];
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
  return out;
}

bool is_plain_symbol_string(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!is_base64url_char(c) && c != '.') return false;
  }
  // Must not reclassify as a structured kind.
  if (looks_like_number(s) || looks_like_principal(s)) return false;
  if (std::isdigit(static_cast<unsigned char>(s[0]))) return false;
  return true;
}

std::string Term::canonical() const {
  switch (kind_) {
    case TermKind::Variable: return "?" + text_;
    case TermKind::Number: return text_;
    case TermKind::Principal:
    case TermKind::Scid: return text_;
    case TermKind::Pathname:
      // Single-component rootless pathnames need the tag to round-trip.
      return text_.find('/') == std::string::npos &&
                     text_.find(':') == std::string::npos
                 ? "path" + quote_string(text_)
                 : text_;
    case TermKind::Ipv4Prefix: return "ipv4" + quote_string(text_);
    case TermKind::SelfRef: return "$Self";
    case TermKind::String:
      return is_plain_symbol_string(text_) ? text_ : quote_string(text_);
  }
  return text_;
}

size_t Term::hash() const {
  size_t h = std::hash<std::string>()(text_);
  return h ^ (static_cast<size_t>(kind_) * 0x9e3779b97f4a7c15ull);
}

}  // namespace safe::logic
