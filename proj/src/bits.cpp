#include "vlpdr/bits.hpp"

#include "vlpdr/error.hpp"

namespace vlpdr {

Bits bits_from_string(std::string_view s) {
  Bits out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '0' || c == '1') {
      out.push_back(static_cast<std::uint8_t>(c - '0'));
    } else if (c != ' ' && c != '\t' && c != '\r' && c != '\n' && c != '.') {
      throw SchemaError(std::string("invalid bit character '") + c + "'");
    }
  }
  return out;
}

std::string bits_to_string(const Bits& bits) {
  std::string s;
  s.reserve(bits.size());
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

std::string bits_to_hex(const Bits& bits) {
  static constexpr char kDigits[] = "0123456789abcdef";
  const std::size_t pad = (4 - bits.size() % 4) % 4;
  std::string out;
  unsigned nibble = 0;
  std::size_t filled = pad;
  for (auto b : bits) {
    nibble = (nibble << 1) | (b & 1u);
    if (++filled == 4) {
      out.push_back(kDigits[nibble]);
      nibble = 0;
      filled = 0;
    }
  }
  return out;
}

Bits bits_from_hex(std::string_view hex, std::size_t length) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  Bits all;
  for (char c : hex) {
    unsigned v;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else throw SchemaError(std::string("invalid hex digit '") + c + "'");
    for (int i = 3; i >= 0; --i) all.push_back(static_cast<std::uint8_t>((v >> i) & 1u));
  }
  if (all.size() < length) all.insert(all.begin(), length - all.size(), 0);
  const std::size_t extra = all.size() - length;
  for (std::size_t i = 0; i < extra; ++i) {
    if (all[i]) throw SchemaError("hex id '" + std::string(hex) + "' exceeds " + std::to_string(length) + " bits");
  }
  return Bits(all.begin() + static_cast<std::ptrdiff_t>(extra), all.end());
}

}  // namespace vlpdr
