#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace safe::logic {

// Kinds of logic terms. All kinds except Variable are ground. SelfRef is the
// unresolved issuer placeholder ($Self): it behaves as a ground constant
// during evaluation but is rejected in signed certificate content until
// resolved to a concrete principal.
enum class TermKind : uint8_t {
  Variable,
  String,
  Number,
  Principal,
  Scid,
  Pathname,
  Ipv4Prefix,
  SelfRef,
};

std::string_view term_kind_name(TermKind k);

class Term {
 public:
  Term() : kind_(TermKind::String) {}

  static Term variable(std::string name);
  static Term string(std::string value);
  static Term number(int64_t value);
  static Term principal(std::string base64url);
  static Term scid(std::string text);
  static Term pathname(std::string text);
  static Term ipv4_prefix(std::string canonical_text);
  static Term self_ref();

  // Classifies a bare symbol token (number / ipv4 prefix / principalID /
  // scid / pathname / plain string, in that order). Throws std::invalid_argument
  // for symbols that match a structured kind's shape but fail its validation
  // (e.g. an ipv4 prefix with nonzero host bits).
  static Term classify_symbol(const std::string& symbol);

  TermKind kind() const { return kind_; }
  const std::string& text() const { return text_; }
  int64_t number_value() const { return number_; }

  bool is_variable() const { return kind_ == TermKind::Variable; }
  bool is_ground() const { return kind_ != TermKind::Variable; }

  // Canonical serialized form; parsing it back yields an equal term.
  std::string canonical() const;

  bool operator==(const Term& o) const {
    return kind_ == o.kind_ && text_ == o.text_;
  }
  bool operator!=(const Term& o) const { return !(*this == o); }
  bool operator<(const Term& o) const {
    if (kind_ != o.kind_) return kind_ < o.kind_;
    return text_ < o.text_;
  }

  size_t hash() const;

 private:
  TermKind kind_;
  std::string text_;
  int64_t number_ = 0;
};

// Escapes a string for a double-quoted literal (canonical, deterministic).
std::string quote_string(std::string_view raw);

// True if `s` can be serialized as a bare symbol and classifies back to a
// plain String term (no quoting needed).
bool is_plain_symbol_string(const std::string& s);

}  // namespace safe::logic

template <>
struct std::hash<safe::logic::Term> {
  size_t operator()(const safe::logic::Term& t) const { return t.hash(); }
};
