#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace vlpdr {

/// One bit per element, values 0 or 1.
using Bits = std::vector<std::uint8_t>;

Bits bits_from_string(std::string_view s);
std::string bits_to_string(const Bits& bits);

/// MSB-first hex rendering; the leading nibble is zero padded on the left
/// when the length is not a multiple of four.
std::string bits_to_hex(const Bits& bits);
Bits bits_from_hex(std::string_view hex, std::size_t length);

/// Identifier broadcast by a luminaire. Length is fixed by the packet schema.
class LedId {
 public:
  LedId() = default;
  explicit LedId(Bits bits) : bits_(std::move(bits)) {}

  static LedId from_hex(std::string_view hex, std::size_t length) {
    return LedId(bits_from_hex(hex, length));
  }

  const Bits& bits() const noexcept { return bits_; }
  std::size_t size() const noexcept { return bits_.size(); }
  std::string hex() const { return bits_to_hex(bits_); }

  friend bool operator==(const LedId&, const LedId&) = default;
  friend auto operator<=>(const LedId&, const LedId&) = default;

 private:
  Bits bits_;
};

}  // namespace vlpdr
