// SPDX-License-Identifier: Apache-2.0
//
// Network model: subnets, typed nodes and their services, router links and
// an ordered first-match firewall. Topologies are plain values; once built
// they are never mutated (runtime service state lives in the engine).

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rangesim/types.hpp"

namespace rangesim {

enum class NodeRole {
  JumpHost,
  WebServer,
  AppServer,
  VpnClient,
  VpnServer,
  VpnHost,
  DnsServer,
  FileServer,
  LoggingServer,
  DecoyHost,
  Workstation,
};

enum class ServiceKind { Ssh, Http, WebApp, Dns, Smb, VpnGateway, SyslogSink, Ntp };

enum class SubnetLabel { LAN1, LAN2, VPN, EXTERNAL };

enum class VulnId {
  WeakSshPassword,
  SqlInjection,
  VpnPasswordOnlyAuth,
  DnsCachePoisonable,
  SmbRemoteCommandExec,
};

enum class Preset { SME, LargeEnterprise };

enum class Reachability { Allowed, DeniedByFirewall, NoRoute };

std::string_view to_string(NodeRole v);
std::string_view to_string(ServiceKind v);
std::string_view to_string(SubnetLabel v);
std::string_view to_string(VulnId v);
std::string_view to_string(Preset v);
std::string_view to_string(Reachability v);

NodeRole parse_node_role(std::string_view text);
ServiceKind parse_service_kind(std::string_view text);
SubnetLabel parse_subnet_label(std::string_view text);
VulnId parse_vuln_id(std::string_view text);
Preset parse_preset(std::string_view text);

/// Well-known port for a service kind (WebApp defaults to 8080).
std::uint16_t default_port(ServiceKind kind);

struct ServiceSpec {
  ServiceKind kind = ServiceKind::Ssh;
  std::uint16_t port = 22;
  bool enabled = true;

  friend bool operator==(const ServiceSpec&, const ServiceSpec&) = default;
};

struct NodeAddress {
  Ipv4 addr;
  SubnetLabel subnet = SubnetLabel::LAN1;

  friend bool operator==(const NodeAddress&, const NodeAddress&) = default;
};

struct NodeSpec {
  NodeId id;
  NodeRole role = NodeRole::Workstation;
  std::vector<NodeAddress> addresses;
  std::vector<ServiceSpec> services;
  std::vector<VulnId> vulnerabilities;
  std::int64_t clock_offset_ms = 0;
  bool internet_egress = false;

  const ServiceSpec* service_on(std::uint16_t port) const;
  const ServiceSpec* service(ServiceKind kind) const;
  bool has_vulnerability(VulnId id) const;
  /// Address inside the given subnet, if the node has one.
  std::optional<Ipv4> address_in(SubnetLabel label) const;
  /// First listed address; used as the node's source address by default.
  Ipv4 primary_address() const { return addresses.front().addr; }

  friend bool operator==(const NodeSpec&, const NodeSpec&) = default;
};

struct Subnet {
  SubnetLabel label = SubnetLabel::LAN1;
  Cidr cidr;

  friend bool operator==(const Subnet&, const Subnet&) = default;
};

/// One side of a firewall rule.
struct RuleEndpoint {
  enum class Kind { Any, Subnet, Node, External };
  Kind kind = Kind::Any;
  SubnetLabel subnet = SubnetLabel::LAN1;
  NodeId node;

  static RuleEndpoint any() { return {}; }
  static RuleEndpoint external() { return {Kind::External, SubnetLabel::EXTERNAL, {}}; }
  static RuleEndpoint of_subnet(SubnetLabel s) { return {Kind::Subnet, s, {}}; }
  static RuleEndpoint of_node(NodeId id) { return {Kind::Node, SubnetLabel::LAN1, std::move(id)}; }

  friend bool operator==(const RuleEndpoint&, const RuleEndpoint&) = default;
};

struct FirewallRule {
  RuleEndpoint src;
  RuleEndpoint dst;
  std::optional<std::uint16_t> port;  // nullopt matches every port
  bool allow = false;

  friend bool operator==(const FirewallRule&, const FirewallRule&) = default;
};

/// Addresses outside every declared subnet are EXTERNAL (the Internet).
struct Topology {
  std::vector<Subnet> subnets;
  std::vector<NodeSpec> nodes;
  std::vector<std::pair<SubnetLabel, SubnetLabel>> router_links;
  std::vector<FirewallRule> firewall_rules;
  std::vector<SubnetLabel> capture_scope;

  const NodeSpec* find_node(std::string_view id) const;
  /// Throws ContractError for unknown ids.
  const NodeSpec& node(std::string_view id) const;
  const NodeSpec* node_at(Ipv4 addr) const;
  const NodeSpec* first_with_role(NodeRole role) const;
  const Subnet* find_subnet(SubnetLabel label) const;
  /// Label of the declared subnet containing addr, or EXTERNAL.
  SubnetLabel label_of(Ipv4 addr) const;
  bool in_capture_scope(Ipv4 addr) const;
  bool linked(SubnetLabel a, SubnetLabel b) const;

  friend bool operator==(const Topology&, const Topology&) = default;
};

/// Resolver used by scans and lookups outside the company network.
inline constexpr Ipv4 kPublicResolver{8, 8, 8, 8};

/// Builds one of the two shipped topologies. Host addresses within each
/// subnet are a deterministic function of the seed.
Topology build_preset(Preset preset, std::uint64_t seed);

/// Throws ScenarioError naming the first violated invariant.
void validate(const Topology& topology);

/// Network-level verdict for a packet from src to dst_addr:dst_port.
/// `via_tunnel` means src holds an established VPN tunnel.
Reachability reachable(const Topology& topology, std::string_view src, Ipv4 dst_addr,
                       std::uint16_t dst_port, bool via_tunnel = false);

/// Assigned addresses inside a declared subnet, ascending.
std::vector<std::pair<NodeId, Ipv4>> hosts_in(const Topology& topology, const Cidr& cidr);

/// Subnets a node can route into directly (its own plus router-linked ones).
std::vector<SubnetLabel> routed_subnets(const Topology& topology, const NodeSpec& node);

}  // namespace rangesim
