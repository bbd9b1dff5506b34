// SPDX-License-Identifier: Apache-2.0

#include "rangesim/types.hpp"

#include <charconv>

namespace rangesim {

namespace {

std::uint32_t parse_uint(std::string_view text, std::uint32_t max, std::string_view what) {
  std::uint32_t value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (text.empty() || ec != std::errc{} || ptr != end || value > max) {
    throw ParseError("invalid " + std::string(what) + ": '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

Ipv4 Ipv4::parse(std::string_view text) {
  std::uint32_t value = 0;
  std::size_t start = 0;
  for (int i = 0; i < 4; ++i) {
    const std::size_t dot = text.find('.', start);
    if ((i < 3) != (dot != std::string_view::npos)) {
      throw ParseError("invalid IPv4 address: '" + std::string(text) + "'");
    }
    const auto part = text.substr(start, i < 3 ? dot - start : std::string_view::npos);
    value = (value << 8) | parse_uint(part, 255, "IPv4 address");
    start = dot + 1;
  }
  return Ipv4(value);
}

std::string Ipv4::str() const {
  return std::to_string(octet(0)) + "." + std::to_string(octet(1)) + "." +
         std::to_string(octet(2)) + "." + std::to_string(octet(3));
}

Cidr::Cidr(Ipv4 base, int prefix) : prefix_(prefix) {
  if (prefix < 0 || prefix > 32) {
    throw ParseError("CIDR prefix out of range: " + std::to_string(prefix));
  }
  base_ = Ipv4(base.value() & mask());
}

Cidr Cidr::parse(std::string_view text) {
  const auto slash = text.find('/');
  if (slash == std::string_view::npos) {
    throw ParseError("CIDR block missing prefix: '" + std::string(text) + "'");
  }
  const auto prefix = parse_uint(text.substr(slash + 1), 32, "CIDR prefix");
  return Cidr(Ipv4::parse(text.substr(0, slash)), static_cast<int>(prefix));
}

std::uint32_t Cidr::mask() const {
  return prefix_ == 0 ? 0u : ~std::uint32_t{0} << (32 - prefix_);
}

bool Cidr::contains(Ipv4 addr) const { return (addr.value() & mask()) == base_.value(); }

bool Cidr::overlaps(const Cidr& other) const {
  const auto m = prefix_ < other.prefix_ ? mask() : other.mask();
  return (base_.value() & m) == (other.base_.value() & m);
}

Ipv4 Cidr::broadcast() const { return Ipv4(base_.value() | ~mask()); }

std::uint32_t Cidr::host_count() const {
  if (prefix_ >= 31) return prefix_ == 32 ? 1u : 2u;
  return (~mask()) - 1;
}

Ipv4 Cidr::first_host() const {
  return prefix_ >= 31 ? base_ : Ipv4(base_.value() + 1);
}

Ipv4 Cidr::last_host() const {
  return prefix_ >= 31 ? broadcast() : Ipv4(broadcast().value() - 1);
}

std::string Cidr::str() const { return base_.str() + "/" + std::to_string(prefix_); }

}  // namespace rangesim
