#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <string_view>

#include "nem/error.hpp"

namespace nem {

// Computational basis state packed into an integer. Qubit q is bit q, and
// qubit q corresponds to lattice site q+1. The textual form lists qubit 0
// first, so "0101" has qubit 1 and qubit 3 set.
using Bits = std::uint64_t;

inline constexpr int kMaxQubits = 30;

inline int bit(Bits s, int q) { return static_cast<int>((s >> q) & 1u); }

inline int parity(Bits s) { return std::popcount(s) & 1; }

inline std::string bits_to_string(Bits s, int n) {
  std::string out(static_cast<std::size_t>(n), '0');
  for (int q = 0; q < n; ++q) out[static_cast<std::size_t>(q)] = bit(s, q) ? '1' : '0';
  return out;
}

inline Bits bits_from_string(std::string_view text) {
  if (text.size() > 63) throw ValidationError("bitstring longer than 63 characters");
  Bits s = 0;
  for (std::size_t q = 0; q < text.size(); ++q) {
    if (text[q] == '1')
      s |= Bits{1} << q;
    else if (text[q] != '0')
      throw ValidationError(std::string("invalid bit character '") + text[q] + "'");
  }
  return s;
}

}  // namespace nem
