// SPDX-License-Identifier: Apache-2.0
//
// Core value types shared by every rangesim module: addresses, CIDR blocks,
// simulated time and the error hierarchy.

#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rangesim {

/// Simulated time since the scenario epoch. Microsecond resolution.
using SimTime = std::chrono::microseconds;

constexpr SimTime ms(std::int64_t v) { return std::chrono::milliseconds(v); }
constexpr SimTime seconds(std::int64_t v) { return std::chrono::seconds(v); }

/// Node identifiers double as hostnames in syslog output.
using NodeId = std::string;

class Ipv4 {
 public:
  constexpr Ipv4() = default;
  constexpr explicit Ipv4(std::uint32_t value) : value_(value) {}
  constexpr Ipv4(std::uint8_t a, std::uint8_t b, std::uint8_t c, std::uint8_t d)
      : value_((std::uint32_t{a} << 24) | (std::uint32_t{b} << 16) |
               (std::uint32_t{c} << 8) | std::uint32_t{d}) {}

  /// Throws ParseError on malformed dotted quads.
  static Ipv4 parse(std::string_view text);

  constexpr std::uint32_t value() const { return value_; }
  constexpr std::uint8_t octet(int i) const {
    return static_cast<std::uint8_t>(value_ >> (24 - 8 * i));
  }
  std::string str() const;

  friend constexpr auto operator<=>(Ipv4, Ipv4) = default;

 private:
  std::uint32_t value_ = 0;
};

class Cidr {
 public:
  constexpr Cidr() = default;
  /// The base is masked down to the network address.
  Cidr(Ipv4 base, int prefix);

  static Cidr parse(std::string_view text);

  Ipv4 network() const { return base_; }
  int prefix() const { return prefix_; }
  std::uint32_t mask() const;
  bool contains(Ipv4 addr) const;
  bool overlaps(const Cidr& other) const;
  /// Usable host addresses: excludes network and broadcast for prefixes < 31.
  std::uint32_t host_count() const;
  Ipv4 first_host() const;
  Ipv4 last_host() const;
  Ipv4 broadcast() const;
  std::string str() const;

  friend auto operator<=>(const Cidr&, const Cidr&) = default;

 private:
  Ipv4 base_{};
  int prefix_ = 32;
};

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input (addresses, documents, event logs).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A scenario or topology that violates a structural invariant.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's contract (unknown node, ordering rule...).
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace rangesim
