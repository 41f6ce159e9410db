#include "safe/logic/ipv4.hpp"

#include <cctype>

namespace safe::logic {

std::string Ipv4Prefix::text() const {
  std::string s;
  for (int shift = 24; shift >= 0; shift -= 8) {
    s += std::to_string((address >> shift) & 0xff);
    if (shift) s += '.';
  }
  s += '/';
  s += std::to_string(length);
  return s;
}

std::optional<Ipv4Prefix> parse_ipv4_prefix(std::string_view text) {
  uint32_t addr = 0;
  size_t pos = 0;
  auto read_int = [&](int max_digits) -> int {
    if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos])))
      return -1;
    int v = 0, digits = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      v = v * 10 + (text[pos] - '0');
      ++pos;
      if (++digits > max_digits) return -1;
    }
    return v;
  };
  for (int i = 0; i < 4; ++i) {
    int octet = read_int(3);
    if (octet < 0 || octet > 255) return std::nullopt;
    addr = (addr << 8) | static_cast<uint32_t>(octet);
    if (i < 3) {
      if (pos >= text.size() || text[pos] != '.') return std::nullopt;
      ++pos;
    }
  }
  if (pos >= text.size() || text[pos] != '/') return std::nullopt;
  ++pos;
  int len = read_int(2);
  if (len < 0 || len > 32 || pos != text.size()) return std::nullopt;
  Ipv4Prefix p{addr, static_cast<uint8_t>(len)};
  if ((addr & ~p.mask()) != 0) return std::nullopt;  // host bits must be zero
  return p;
}

bool ipv4_contains(const Ipv4Prefix& outer, const Ipv4Prefix& inner) {
  if (inner.length < outer.length) return false;
  return (inner.address & outer.mask()) == outer.address;
}

bool ipv4_in_range(const Ipv4Prefix& addr, const Ipv4Prefix& range) {
  return ipv4_contains(range, addr);
}

}  // namespace safe::logic
