// SPDX-License-Identifier: Apache-2.0
//
// The attacker's action vocabulary. Targets are addressed by IPv4 so that an
// interactive participant never needs knowledge of hidden node identities.

#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rangesim/netmodel.hpp"

namespace rangesim {

enum class ActionKind {
  ScanSubnet,
  SshBruteForce,
  SqliProbe,
  SqliDump,
  VpnConnect,
  DnsPoison,
  SmbReverseShell,
  ExfiltrateFiles,
  DefaceWebsite,
  ChangeDbContents,
  DisableService,
  LateralMove,
  PrivilegeEscalate,
  SendPhish,
};

enum class Profile { Hacktivist, PettyThief, BlackHat };

std::string_view to_string(ActionKind v);
std::string_view to_string(Profile v);
ActionKind parse_action_kind(std::string_view text);
Profile parse_profile(std::string_view text);

/// TCP ports of every preset service.
inline constexpr std::array<std::uint16_t, 7> kDefaultScanPorts = {22, 53, 80, 445, 514, 1194, 8080};

struct ScanParams {
  Cidr cidr;
  std::vector<std::uint16_t> ports;  // empty selects kDefaultScanPorts
  friend bool operator==(const ScanParams&, const ScanParams&) = default;
};

struct BruteForceParams {
  Ipv4 target;
  std::string username;
  /// Prefix of the canonical dictionary to try; ignored when `words` is set.
  std::size_t dictionary_size = 1000;
  std::vector<std::string> words;
  friend bool operator==(const BruteForceParams&, const BruteForceParams&) = default;
};

struct SqliParams {
  Ipv4 target;
  std::uint16_t port = 8080;
  friend bool operator==(const SqliParams&, const SqliParams&) = default;
};

struct VpnConnectParams {
  Ipv4 server;
  std::string username;
  std::string password;
  friend bool operator==(const VpnConnectParams&, const VpnConnectParams&) = default;
};

struct DnsPoisonParams {
  Ipv4 dns_server;
  std::string victim_name;
  Ipv4 attacker_addr;
  friend bool operator==(const DnsPoisonParams&, const DnsPoisonParams&) = default;
};

/// Single-target actions: reverse shell, exfiltration, defacement, database
/// change and privilege escalation.
struct TargetParams {
  Ipv4 target;
  friend bool operator==(const TargetParams&, const TargetParams&) = default;
};

struct DisableServiceParams {
  Ipv4 target;
  ServiceKind service = ServiceKind::Http;
  friend bool operator==(const DisableServiceParams&, const DisableServiceParams&) = default;
};

struct LateralMoveParams {
  std::optional<NodeId> from;  // defaults to the current position
  Ipv4 to;
  friend bool operator==(const LateralMoveParams&, const LateralMoveParams&) = default;
};

struct PhishParams {
  std::string sender;
  std::string recipient;
  friend bool operator==(const PhishParams&, const PhishParams&) = default;
};

using ActionParams =
    std::variant<ScanParams, BruteForceParams, SqliParams, VpnConnectParams, DnsPoisonParams,
                 TargetParams, DisableServiceParams, LateralMoveParams, PhishParams>;

struct AttackAction {
  ActionKind kind = ActionKind::ScanSubnet;
  ActionParams params;

  static AttackAction scan(Cidr cidr, std::vector<std::uint16_t> ports = {});
  static AttackAction brute_force(Ipv4 target, std::string username, std::size_t dictionary_size = 1000);
  static AttackAction brute_force_words(Ipv4 target, std::string username, std::vector<std::string> words);
  static AttackAction sqli_probe(Ipv4 target, std::uint16_t port = 8080);
  static AttackAction sqli_dump(Ipv4 target, std::uint16_t port = 8080);
  static AttackAction vpn_connect(Ipv4 server, std::string username, std::string password);
  static AttackAction dns_poison(Ipv4 server, std::string victim, Ipv4 attacker_addr);
  static AttackAction targeted(ActionKind kind, Ipv4 target);
  static AttackAction disable_service(Ipv4 target, ServiceKind service);
  static AttackAction lateral_move(Ipv4 to, std::optional<NodeId> from = std::nullopt);
  static AttackAction send_phish(std::string sender, std::string recipient);

  /// Throws ContractError when params do not fit the kind's schema.
  void check() const;

  friend bool operator==(const AttackAction&, const AttackAction&) = default;
};

}  // namespace rangesim
