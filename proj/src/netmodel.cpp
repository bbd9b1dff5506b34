// SPDX-License-Identifier: Apache-2.0

#include "rangesim/netmodel.hpp"

#include <algorithm>
#include <array>
#include <set>

#include "rangesim/rng.hpp"

namespace rangesim {

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view text, const std::array<E, N>& values, std::string_view what) {
  for (E v : values) {
    if (to_string(v) == text) return v;
  }
  throw ParseError("unknown " + std::string(what) + ": '" + std::string(text) + "'");
}

constexpr std::array kRoles = {
    NodeRole::JumpHost,   NodeRole::WebServer,  NodeRole::AppServer,     NodeRole::VpnClient,
    NodeRole::VpnServer,  NodeRole::VpnHost,    NodeRole::DnsServer,     NodeRole::FileServer,
    NodeRole::LoggingServer, NodeRole::DecoyHost, NodeRole::Workstation,
};
constexpr std::array kServices = {
    ServiceKind::Ssh, ServiceKind::Http,       ServiceKind::WebApp,     ServiceKind::Dns,
    ServiceKind::Smb, ServiceKind::VpnGateway, ServiceKind::SyslogSink, ServiceKind::Ntp,
};
constexpr std::array kLabels = {SubnetLabel::LAN1, SubnetLabel::LAN2, SubnetLabel::VPN,
                                SubnetLabel::EXTERNAL};
constexpr std::array kVulns = {VulnId::WeakSshPassword, VulnId::SqlInjection,
                               VulnId::VpnPasswordOnlyAuth, VulnId::DnsCachePoisonable,
                               VulnId::SmbRemoteCommandExec};
constexpr std::array kPresets = {Preset::SME, Preset::LargeEnterprise};

ServiceSpec svc(ServiceKind kind) { return {kind, default_port(kind), true}; }

}  // namespace

std::string_view to_string(NodeRole v) {
  switch (v) {
    case NodeRole::JumpHost: return "JumpHost";
    case NodeRole::WebServer: return "WebServer";
    case NodeRole::AppServer: return "AppServer";
    case NodeRole::VpnClient: return "VpnClient";
    case NodeRole::VpnServer: return "VpnServer";
    case NodeRole::VpnHost: return "VpnHost";
    case NodeRole::DnsServer: return "DnsServer";
    case NodeRole::FileServer: return "FileServer";
    case NodeRole::LoggingServer: return "LoggingServer";
    case NodeRole::DecoyHost: return "DecoyHost";
    case NodeRole::Workstation: return "Workstation";
  }
  return "?";
}

std::string_view to_string(ServiceKind v) {
  switch (v) {
    case ServiceKind::Ssh: return "Ssh";
    case ServiceKind::Http: return "Http";
    case ServiceKind::WebApp: return "WebApp";
    case ServiceKind::Dns: return "Dns";
    case ServiceKind::Smb: return "Smb";
    case ServiceKind::VpnGateway: return "VpnGateway";
    case ServiceKind::SyslogSink: return "SyslogSink";
    case ServiceKind::Ntp: return "Ntp";
  }
  return "?";
}

std::string_view to_string(SubnetLabel v) {
  switch (v) {
    case SubnetLabel::LAN1: return "LAN1";
    case SubnetLabel::LAN2: return "LAN2";
    case SubnetLabel::VPN: return "VPN";
    case SubnetLabel::EXTERNAL: return "EXTERNAL";
  }
  return "?";
}

std::string_view to_string(VulnId v) {
  switch (v) {
    case VulnId::WeakSshPassword: return "WeakSshPassword";
    case VulnId::SqlInjection: return "SqlInjection";
    case VulnId::VpnPasswordOnlyAuth: return "VpnPasswordOnlyAuth";
    case VulnId::DnsCachePoisonable: return "DnsCachePoisonable";
    case VulnId::SmbRemoteCommandExec: return "SmbRemoteCommandExec";
  }
  return "?";
}

std::string_view to_string(Preset v) {
  return v == Preset::SME ? "SME" : "LargeEnterprise";
}

std::string_view to_string(Reachability v) {
  switch (v) {
    case Reachability::Allowed: return "Allowed";
    case Reachability::DeniedByFirewall: return "DeniedByFirewall";
    case Reachability::NoRoute: return "NoRoute";
  }
  return "?";
}

NodeRole parse_node_role(std::string_view t) { return parse_enum(t, kRoles, "node role"); }
ServiceKind parse_service_kind(std::string_view t) {
  return parse_enum(t, kServices, "service kind");
}
SubnetLabel parse_subnet_label(std::string_view t) {
  return parse_enum(t, kLabels, "subnet label");
}
VulnId parse_vuln_id(std::string_view t) { return parse_enum(t, kVulns, "vulnerability"); }
Preset parse_preset(std::string_view t) { return parse_enum(t, kPresets, "preset"); }

std::uint16_t default_port(ServiceKind kind) {
  switch (kind) {
    case ServiceKind::Ssh: return 22;
    case ServiceKind::Http: return 80;
    case ServiceKind::WebApp: return 8080;
    case ServiceKind::Dns: return 53;
    case ServiceKind::Smb: return 445;
    case ServiceKind::VpnGateway: return 1194;
    case ServiceKind::SyslogSink: return 514;
    case ServiceKind::Ntp: return 123;
  }
  return 0;
}

const ServiceSpec* NodeSpec::service_on(std::uint16_t port) const {
  auto it = std::find_if(services.begin(), services.end(),
                         [&](const ServiceSpec& s) { return s.port == port; });
  return it == services.end() ? nullptr : &*it;
}

const ServiceSpec* NodeSpec::service(ServiceKind kind) const {
  auto it = std::find_if(services.begin(), services.end(),
                         [&](const ServiceSpec& s) { return s.kind == kind; });
  return it == services.end() ? nullptr : &*it;
}

bool NodeSpec::has_vulnerability(VulnId id) const {
  return std::find(vulnerabilities.begin(), vulnerabilities.end(), id) != vulnerabilities.end();
}

std::optional<Ipv4> NodeSpec::address_in(SubnetLabel label) const {
  for (const auto& a : addresses) {
    if (a.subnet == label) return a.addr;
  }
  return std::nullopt;
}

const NodeSpec* Topology::find_node(std::string_view id) const {
  auto it = std::find_if(nodes.begin(), nodes.end(), [&](const NodeSpec& n) { return n.id == id; });
  return it == nodes.end() ? nullptr : &*it;
}

const NodeSpec& Topology::node(std::string_view id) const {
  if (const auto* n = find_node(id)) return *n;
  throw ContractError("unknown node id '" + std::string(id) + "'");
}

const NodeSpec* Topology::node_at(Ipv4 addr) const {
  for (const auto& n : nodes) {
    for (const auto& a : n.addresses) {
      if (a.addr == addr) return &n;
    }
  }
  return nullptr;
}

const NodeSpec* Topology::first_with_role(NodeRole role) const {
  auto it = std::find_if(nodes.begin(), nodes.end(),
                         [&](const NodeSpec& n) { return n.role == role; });
  return it == nodes.end() ? nullptr : &*it;
}

const Subnet* Topology::find_subnet(SubnetLabel label) const {
  auto it = std::find_if(subnets.begin(), subnets.end(),
                         [&](const Subnet& s) { return s.label == label; });
  return it == subnets.end() ? nullptr : &*it;
}

SubnetLabel Topology::label_of(Ipv4 addr) const {
  for (const auto& s : subnets) {
    if (s.cidr.contains(addr)) return s.label;
  }
  return SubnetLabel::EXTERNAL;
}

bool Topology::in_capture_scope(Ipv4 addr) const {
  const auto label = label_of(addr);
  return label != SubnetLabel::EXTERNAL &&
         std::find(capture_scope.begin(), capture_scope.end(), label) != capture_scope.end();
}

bool Topology::linked(SubnetLabel a, SubnetLabel b) const {
  return std::any_of(router_links.begin(), router_links.end(), [&](const auto& link) {
    return (link.first == a && link.second == b) || (link.first == b && link.second == a);
  });
}

namespace {

/// Hands out distinct host octets for one subnet in a seed-determined order.
class OctetPool {
 public:
  OctetPool(std::uint64_t seed, int lo, int hi) {
    for (int o = lo; o <= hi; ++o) octets_.push_back(static_cast<std::uint8_t>(o));
    Rng rng(seed);
    rng.shuffle(octets_);
  }
  std::uint8_t take() { return octets_[next_++]; }

 private:
  std::vector<std::uint8_t> octets_;
  std::size_t next_ = 0;
};

Ipv4 in_subnet(const Cidr& c, std::uint8_t octet) {
  return Ipv4(c.network().value() | octet);
}

NodeSpec make_node(NodeId id, NodeRole role, std::vector<ServiceSpec> services) {
  NodeSpec n;
  n.id = std::move(id);
  n.role = role;
  n.services = std::move(services);
  return n;
}

}  // namespace

Topology build_preset(Preset preset, std::uint64_t seed) {
  using enum ServiceKind;
  Topology t;
  const Cidr vpn = Cidr::parse("10.8.0.0/24");

  auto jump = make_node("jump", NodeRole::JumpHost, {svc(Ssh)});
  jump.internet_egress = true;
  auto web = make_node("web", NodeRole::WebServer, {svc(Ssh), svc(Http)});
  web.vulnerabilities = {VulnId::WeakSshPassword};
  auto app = make_node("app", NodeRole::AppServer, {svc(Ssh), svc(WebApp)});
  app.vulnerabilities = {VulnId::SqlInjection};
  auto dns = make_node("dns", NodeRole::DnsServer, {svc(Ssh), svc(Dns)});
  dns.vulnerabilities = {VulnId::DnsCachePoisonable};
  auto files = make_node("files", NodeRole::FileServer, {svc(Ssh), svc(Smb)});
  files.vulnerabilities = {VulnId::SmbRemoteCommandExec};
  auto logs = make_node("logs", NodeRole::LoggingServer, {svc(SyslogSink), svc(Ntp)});
  auto vpnserver = make_node("vpnserver", NodeRole::VpnServer, {svc(Ssh), svc(VpnGateway)});
  vpnserver.vulnerabilities = {VulnId::VpnPasswordOnlyAuth};
  auto vpnclient = make_node("vpnclient", NodeRole::VpnClient, {svc(Ssh)});
  auto vpnhost = make_node("vpnhost", NodeRole::VpnHost, {svc(Smb)});
  vpnhost.clock_offset_ms = 1500;
  auto decoy = [](int i) {
    return make_node("decoy" + std::to_string(i), NodeRole::DecoyHost, {svc(Ssh), svc(Smb)});
  };

  // VPN side: server holds .1, the host draws from .2-.199; .200 and up are
  // reserved for tunnel clients.
  OctetPool vpn_pool(Rng::mix(seed ^ 0x5650ULL), 2, 199);
  vpnserver.addresses.push_back({in_subnet(vpn, 1), SubnetLabel::VPN});
  vpnhost.addresses.push_back({in_subnet(vpn, vpn_pool.take()), SubnetLabel::VPN});

  auto place = [](std::vector<NodeSpec*> members, const Subnet& subnet, std::uint64_t s) {
    OctetPool pool(s, 2, 254);
    for (auto* n : members) {
      n->addresses.insert(n->addresses.begin(),
                          NodeAddress{in_subnet(subnet.cidr, pool.take()), subnet.label});
    }
  };

  t.firewall_rules.push_back({RuleEndpoint::of_node("jump"), RuleEndpoint::external(),
                              std::nullopt, true});
  t.firewall_rules.push_back({RuleEndpoint::any(), RuleEndpoint::external(), std::nullopt, false});

  if (preset == Preset::SME) {
    const Subnet lan{SubnetLabel::LAN1, Cidr::parse("10.0.2.0/24")};
    auto d1 = decoy(1), d2 = decoy(2);
    place({&jump, &web, &app, &dns, &files, &logs, &d1, &d2, &vpnclient, &vpnserver}, lan,
          Rng::mix(seed ^ 0x4C31ULL));
    t.subnets = {lan, {SubnetLabel::VPN, vpn}};
    t.nodes = {jump, web, app, dns, files, logs, d1, d2, vpnclient, vpnserver, vpnhost};
    t.capture_scope = {SubnetLabel::LAN1};
  } else {
    const Subnet lan1{SubnetLabel::LAN1, Cidr::parse("10.0.1.0/24")};
    const Subnet lan2{SubnetLabel::LAN2, Cidr::parse("10.0.2.0/24")};
    place({&web, &app, &dns, &files, &logs, &vpnserver}, lan1, Rng::mix(seed ^ 0x4C31ULL));
    std::vector<NodeSpec> workstations;
    for (int i = 1; i <= 4; ++i) {
      workstations.push_back(make_node("ws" + std::to_string(i), NodeRole::Workstation, {svc(Smb)}));
    }
    auto d1 = decoy(1), d2 = decoy(2), d3 = decoy(3);
    std::vector<NodeSpec*> lan2_members{&jump};
    for (auto& w : workstations) lan2_members.push_back(&w);
    for (auto* d : {&d1, &d2, &d3}) lan2_members.push_back(d);
    lan2_members.push_back(&vpnclient);
    place(lan2_members, lan2, Rng::mix(seed ^ 0x4C32ULL));

    t.subnets = {lan1, lan2, {SubnetLabel::VPN, vpn}};
    t.nodes = {web, app, dns, files, logs, vpnserver, jump};
    for (auto& w : workstations) t.nodes.push_back(w);
    t.nodes.insert(t.nodes.end(), {d1, d2, d3, vpnclient, vpnhost});
    t.router_links = {{SubnetLabel::LAN1, SubnetLabel::LAN2}};
    t.capture_scope = {SubnetLabel::LAN1, SubnetLabel::LAN2};

    // The server LAN only admits employee machines from LAN2, plus log and
    // time traffic to the logging server from everyone.
    const auto lan1_ep = RuleEndpoint::of_subnet(SubnetLabel::LAN1);
    t.firewall_rules.push_back({RuleEndpoint::any(), RuleEndpoint::of_node("logs"),
                                std::uint16_t{514}, true});
    t.firewall_rules.push_back({RuleEndpoint::any(), RuleEndpoint::of_node("logs"),
                                std::uint16_t{123}, true});
    for (const auto& w : workstations) {
      t.firewall_rules.push_back({RuleEndpoint::of_node(w.id), lan1_ep, std::nullopt, true});
    }
    t.firewall_rules.push_back({RuleEndpoint::of_node("vpnclient"), lan1_ep, std::nullopt, true});
    t.firewall_rules.push_back(
        {RuleEndpoint::of_subnet(SubnetLabel::LAN2), lan1_ep, std::nullopt, false});
  }
  return t;
}

namespace {

bool endpoint_names_known(const Topology& t, const RuleEndpoint& e) {
  switch (e.kind) {
    case RuleEndpoint::Kind::Subnet: return t.find_subnet(e.subnet) != nullptr;
    case RuleEndpoint::Kind::Node: return t.find_node(e.node) != nullptr;
    default: return true;
  }
}

bool src_matches(const Topology& t, const RuleEndpoint& e, const NodeSpec& src) {
  switch (e.kind) {
    case RuleEndpoint::Kind::Any: return true;
    case RuleEndpoint::Kind::External: return false;
    case RuleEndpoint::Kind::Node: return e.node == src.id;
    case RuleEndpoint::Kind::Subnet:
      return std::any_of(src.addresses.begin(), src.addresses.end(),
                         [&](const NodeAddress& a) { return a.subnet == e.subnet; });
  }
  (void)t;
  return false;
}

bool dst_matches(const Topology& t, const RuleEndpoint& e, Ipv4 dst) {
  switch (e.kind) {
    case RuleEndpoint::Kind::Any: return true;
    case RuleEndpoint::Kind::External: return t.label_of(dst) == SubnetLabel::EXTERNAL;
    case RuleEndpoint::Kind::Node: {
      const auto* n = t.node_at(dst);
      return n != nullptr && n->id == e.node;
    }
    case RuleEndpoint::Kind::Subnet: return t.label_of(dst) == e.subnet;
  }
  return false;
}

}  // namespace

Reachability reachable(const Topology& t, std::string_view src_id, Ipv4 dst,
                       std::uint16_t dst_port, bool via_tunnel) {
  const NodeSpec& src = t.node(src_id);
  const SubnetLabel dst_label = t.label_of(dst);

  bool path = false;
  for (const auto& a : src.addresses) {
    if (dst_label == SubnetLabel::EXTERNAL) {
      path = path || a.subnet != SubnetLabel::VPN;
    } else {
      path = path || a.subnet == dst_label || t.linked(a.subnet, dst_label);
    }
  }
  if (dst_label == SubnetLabel::VPN && via_tunnel) path = true;
  if (!path) return Reachability::NoRoute;

  for (const auto& rule : t.firewall_rules) {
    if (rule.port && *rule.port != dst_port) continue;
    if (!src_matches(t, rule.src, src) || !dst_matches(t, rule.dst, dst)) continue;
    return rule.allow ? Reachability::Allowed : Reachability::DeniedByFirewall;
  }
  return dst_label == SubnetLabel::EXTERNAL ? Reachability::DeniedByFirewall
                                            : Reachability::Allowed;
}

void validate(const Topology& t) {
  auto fail = [](const std::string& msg) { throw ScenarioError(msg); };

  std::set<SubnetLabel> labels;
  for (std::size_t i = 0; i < t.subnets.size(); ++i) {
    const auto& s = t.subnets[i];
    if (s.label == SubnetLabel::EXTERNAL) {
      fail("subnets[" + std::to_string(i) + "]: EXTERNAL is implicit and cannot be declared");
    }
    if (!labels.insert(s.label).second) {
      fail("subnets[" + std::to_string(i) + "]: duplicate label " + std::string(to_string(s.label)));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (s.cidr.overlaps(t.subnets[j].cidr)) {
        fail("subnets: " + s.cidr.str() + " overlaps " + t.subnets[j].cidr.str());
      }
    }
  }

  std::set<NodeId> ids;
  std::set<Ipv4> addrs;
  int loggers = 0, jumps = 0;
  for (const auto& n : t.nodes) {
    const std::string where = "nodes[" + n.id + "]";
    if (n.id.empty()) fail("nodes: empty node id");
    if (!ids.insert(n.id).second) fail(where + ": duplicate node id");
    if (n.addresses.empty()) fail(where + ": node has no address");
    for (const auto& a : n.addresses) {
      if (t.label_of(a.addr) != a.subnet || !t.find_subnet(a.subnet)) {
        fail(where + ": address " + a.addr.str() + " is not inside declared subnet " +
             std::string(to_string(a.subnet)));
      }
      if (!addrs.insert(a.addr).second) fail(where + ": address " + a.addr.str() + " reused");
      if (n.role == NodeRole::VpnHost && a.subnet != SubnetLabel::VPN) {
        fail(where + ": VpnHost may only have VPN-subnet addresses");
      }
    }
    std::set<std::uint16_t> ports;
    for (const auto& s : n.services) {
      if (s.port == 0) fail(where + ": service port must be in [1, 65535]");
      if (!ports.insert(s.port).second) {
        fail(where + ": more than one service on port " + std::to_string(s.port));
      }
    }
    loggers += n.role == NodeRole::LoggingServer;
    jumps += n.role == NodeRole::JumpHost;
  }
  if (loggers != 1) fail("nodes: exactly one LoggingServer required");
  if (jumps != 1) fail("nodes: exactly one JumpHost required");

  for (const auto& [a, b] : t.router_links) {
    if (!t.find_subnet(a) || !t.find_subnet(b)) fail("router_links: undeclared subnet");
  }
  for (std::size_t i = 0; i < t.firewall_rules.size(); ++i) {
    const auto& r = t.firewall_rules[i];
    if (!endpoint_names_known(t, r.src) || !endpoint_names_known(t, r.dst)) {
      fail("firewall_rules[" + std::to_string(i) + "]: references undeclared subnet or node");
    }
  }

  if (t.capture_scope.empty()) fail("capture_scope: must not be empty");
  for (auto label : t.capture_scope) {
    if (!t.find_subnet(label)) fail("capture_scope: undeclared subnet " + std::string(to_string(label)));
  }
  for (const auto& n : t.nodes) {
    if (n.role == NodeRole::DecoyHost) continue;
    for (const auto& a : n.addresses) {
      if (a.subnet == SubnetLabel::VPN) continue;
      if (std::find(t.capture_scope.begin(), t.capture_scope.end(), a.subnet) ==
          t.capture_scope.end()) {
        fail("capture_scope: subnet " + std::string(to_string(a.subnet)) + " hosting " + n.id +
             " is not captured");
      }
    }
  }

  for (const auto& n : t.nodes) {
    const bool egress = reachable(t, n.id, kPublicResolver, 53) == Reachability::Allowed;
    if (egress != n.internet_egress) {
      fail("nodes[" + n.id + "]: internet_egress disagrees with firewall rules");
    }
  }
}

std::vector<std::pair<NodeId, Ipv4>> hosts_in(const Topology& t, const Cidr& cidr) {
  const bool declared = std::any_of(t.subnets.begin(), t.subnets.end(),
                                    [&](const Subnet& s) { return s.cidr == cidr; });
  if (!declared) throw ContractError("subnet " + cidr.str() + " is not declared");
  std::vector<std::pair<NodeId, Ipv4>> out;
  for (const auto& n : t.nodes) {
    for (const auto& a : n.addresses) {
      if (cidr.contains(a.addr)) out.emplace_back(n.id, a.addr);
    }
  }
  std::sort(out.begin(), out.end(),
            [](const auto& x, const auto& y) { return x.second < y.second; });
  return out;
}

std::vector<SubnetLabel> routed_subnets(const Topology& t, const NodeSpec& node) {
  std::vector<SubnetLabel> out;
  auto add = [&](SubnetLabel l) {
    if (std::find(out.begin(), out.end(), l) == out.end()) out.push_back(l);
  };
  for (const auto& a : node.addresses) {
    add(a.subnet);
    for (const auto& s : t.subnets) {
      if (t.linked(a.subnet, s.label)) add(s.label);
    }
  }
  return out;
}

}  // namespace rangesim
