// SPDX-License-Identifier: Apache-2.0

#include "rangesim/actions.hpp"

namespace rangesim {

namespace {

constexpr std::array kKinds = {
    ActionKind::ScanSubnet,      ActionKind::SshBruteForce,    ActionKind::SqliProbe,
    ActionKind::SqliDump,        ActionKind::VpnConnect,       ActionKind::DnsPoison,
    ActionKind::SmbReverseShell, ActionKind::ExfiltrateFiles,  ActionKind::DefaceWebsite,
    ActionKind::ChangeDbContents, ActionKind::DisableService,  ActionKind::LateralMove,
    ActionKind::PrivilegeEscalate, ActionKind::SendPhish,
};

}  // namespace

std::string_view to_string(ActionKind v) {
  switch (v) {
    case ActionKind::ScanSubnet: return "ScanSubnet";
    case ActionKind::SshBruteForce: return "SshBruteForce";
    case ActionKind::SqliProbe: return "SqliProbe";
    case ActionKind::SqliDump: return "SqliDump";
    case ActionKind::VpnConnect: return "VpnConnect";
    case ActionKind::DnsPoison: return "DnsPoison";
    case ActionKind::SmbReverseShell: return "SmbReverseShell";
    case ActionKind::ExfiltrateFiles: return "ExfiltrateFiles";
    case ActionKind::DefaceWebsite: return "DefaceWebsite";
    case ActionKind::ChangeDbContents: return "ChangeDbContents";
    case ActionKind::DisableService: return "DisableService";
    case ActionKind::LateralMove: return "LateralMove";
    case ActionKind::PrivilegeEscalate: return "PrivilegeEscalate";
    case ActionKind::SendPhish: return "SendPhish";
  }
  return "?";
}

std::string_view to_string(Profile v) {
  switch (v) {
    case Profile::Hacktivist: return "Hacktivist";
    case Profile::PettyThief: return "PettyThief";
    case Profile::BlackHat: return "BlackHat";
  }
  return "?";
}

ActionKind parse_action_kind(std::string_view text) {
  for (auto k : kKinds) {
    if (to_string(k) == text) return k;
  }
  throw ParseError("unknown action kind: '" + std::string(text) + "'");
}

Profile parse_profile(std::string_view text) {
  for (auto p : {Profile::Hacktivist, Profile::PettyThief, Profile::BlackHat}) {
    if (to_string(p) == text) return p;
  }
  throw ParseError("unknown attacker profile: '" + std::string(text) + "'");
}

AttackAction AttackAction::scan(Cidr cidr, std::vector<std::uint16_t> ports) {
  return {ActionKind::ScanSubnet, ScanParams{cidr, std::move(ports)}};
}

AttackAction AttackAction::brute_force(Ipv4 target, std::string username, std::size_t n) {
  return {ActionKind::SshBruteForce, BruteForceParams{target, std::move(username), n, {}}};
}

AttackAction AttackAction::brute_force_words(Ipv4 target, std::string username,
                                             std::vector<std::string> words) {
  const auto n = words.size();
  return {ActionKind::SshBruteForce, BruteForceParams{target, std::move(username), n, std::move(words)}};
}

AttackAction AttackAction::sqli_probe(Ipv4 target, std::uint16_t port) {
  return {ActionKind::SqliProbe, SqliParams{target, port}};
}

AttackAction AttackAction::sqli_dump(Ipv4 target, std::uint16_t port) {
  return {ActionKind::SqliDump, SqliParams{target, port}};
}

AttackAction AttackAction::vpn_connect(Ipv4 server, std::string username, std::string password) {
  return {ActionKind::VpnConnect, VpnConnectParams{server, std::move(username), std::move(password)}};
}

AttackAction AttackAction::dns_poison(Ipv4 server, std::string victim, Ipv4 attacker_addr) {
  return {ActionKind::DnsPoison, DnsPoisonParams{server, std::move(victim), attacker_addr}};
}

AttackAction AttackAction::targeted(ActionKind kind, Ipv4 target) {
  AttackAction a{kind, TargetParams{target}};
  a.check();
  return a;
}

AttackAction AttackAction::disable_service(Ipv4 target, ServiceKind service) {
  return {ActionKind::DisableService, DisableServiceParams{target, service}};
}

AttackAction AttackAction::lateral_move(Ipv4 to, std::optional<NodeId> from) {
  return {ActionKind::LateralMove, LateralMoveParams{std::move(from), to}};
}

AttackAction AttackAction::send_phish(std::string sender, std::string recipient) {
  return {ActionKind::SendPhish, PhishParams{std::move(sender), std::move(recipient)}};
}

void AttackAction::check() const {
  bool ok = false;
  switch (kind) {
    case ActionKind::ScanSubnet: ok = std::holds_alternative<ScanParams>(params); break;
    case ActionKind::SshBruteForce: ok = std::holds_alternative<BruteForceParams>(params); break;
    case ActionKind::SqliProbe:
    case ActionKind::SqliDump: ok = std::holds_alternative<SqliParams>(params); break;
    case ActionKind::VpnConnect: ok = std::holds_alternative<VpnConnectParams>(params); break;
    case ActionKind::DnsPoison: ok = std::holds_alternative<DnsPoisonParams>(params); break;
    case ActionKind::SmbReverseShell:
    case ActionKind::ExfiltrateFiles:
    case ActionKind::DefaceWebsite:
    case ActionKind::ChangeDbContents:
    case ActionKind::PrivilegeEscalate: ok = std::holds_alternative<TargetParams>(params); break;
    case ActionKind::DisableService: ok = std::holds_alternative<DisableServiceParams>(params); break;
    case ActionKind::LateralMove: ok = std::holds_alternative<LateralMoveParams>(params); break;
    case ActionKind::SendPhish: ok = std::holds_alternative<PhishParams>(params); break;
  }
  if (!ok) {
    throw ContractError("parameters do not match action kind " + std::string(to_string(kind)));
  }
}

}  // namespace rangesim
