#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace safe::logic {

// IPv4 prefix per the term-constant convention: "a.b.c.d/len" with
// 0 <= len <= 32 and all host bits zero.
struct Ipv4Prefix {
  uint32_t address = 0;  // network byte interpretation, host order
  uint8_t length = 0;

  uint32_t mask() const {
    return length == 0 ? 0u : ~uint32_t(0) << (32 - length);
  }
  uint32_t range_lo() const { return address; }
  uint32_t range_hi() const { return address | ~mask(); }

  std::string text() const;
};

// Strict parse; rejects malformed syntax, length > 32, and nonzero host bits.
std::optional<Ipv4Prefix> parse_ipv4_prefix(std::string_view text);

// True iff inner's address range is contained in outer's.
bool ipv4_contains(const Ipv4Prefix& outer, const Ipv4Prefix& inner);

// True iff the single address (a /32 prefix or dotted quad) lies in `range`.
bool ipv4_in_range(const Ipv4Prefix& addr, const Ipv4Prefix& range);

}  // namespace safe::logic
