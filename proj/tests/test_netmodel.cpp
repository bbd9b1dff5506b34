// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "rangesim/netmodel.hpp"

using namespace rangesim;

namespace {

Topology sme(std::uint64_t seed = 1) { return build_preset(Preset::SME, seed); }
Topology large(std::uint64_t seed = 1) { return build_preset(Preset::LargeEnterprise, seed); }

void expect_invalid(const Topology& t, const std::string& needle) {
  try {
    validate(t);
    ADD_FAILURE() << "expected ScenarioError mentioning " << needle;
  } catch (const ScenarioError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

}  // namespace

TEST(Presets, ValidateForManySeeds) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    EXPECT_NO_THROW(validate(sme(seed))) << seed;
    EXPECT_NO_THROW(validate(large(seed))) << seed;
  }
}

TEST(Presets, DeterministicInSeed) {
  EXPECT_EQ(sme(9), sme(9));
  EXPECT_EQ(large(9), large(9));
  EXPECT_NE(sme(9), sme(10));
}

TEST(Presets, ShapeOfSme) {
  const auto t = sme();
  EXPECT_EQ(t.nodes.size(), 11u);
  EXPECT_EQ(t.subnets.size(), 2u);
  EXPECT_EQ(t.capture_scope, std::vector<SubnetLabel>{SubnetLabel::LAN1});
  EXPECT_TRUE(t.node("jump").internet_egress);
  EXPECT_FALSE(t.node("web").internet_egress);
  EXPECT_TRUE(t.node("web").has_vulnerability(VulnId::WeakSshPassword));
  EXPECT_EQ(t.node("vpnserver").address_in(SubnetLabel::VPN), Ipv4(10, 8, 0, 1));
  EXPECT_EQ(t.node("vpnhost").clock_offset_ms, 1500);
}

TEST(Presets, ShapeOfLarge) {
  const auto t = large();
  EXPECT_EQ(t.subnets.size(), 3u);
  EXPECT_TRUE(t.linked(SubnetLabel::LAN1, SubnetLabel::LAN2));
  EXPECT_TRUE(t.linked(SubnetLabel::LAN2, SubnetLabel::LAN1));
  EXPECT_EQ(t.node("jump").addresses.front().subnet, SubnetLabel::LAN2);
  EXPECT_EQ(t.node("ws1").role, NodeRole::Workstation);
}

TEST(Topology, Lookups) {
  const auto t = sme();
  const auto web = t.node("web").primary_address();
  EXPECT_EQ(t.node_at(web)->id, "web");
  EXPECT_EQ(t.node_at(Ipv4(10, 0, 2, 255)), nullptr);
  EXPECT_THROW(t.node("nope"), ContractError);
  EXPECT_EQ(t.label_of(web), SubnetLabel::LAN1);
  EXPECT_EQ(t.label_of(kPublicResolver), SubnetLabel::EXTERNAL);
  EXPECT_TRUE(t.in_capture_scope(web));
  EXPECT_FALSE(t.in_capture_scope(Ipv4(10, 8, 0, 1)));
  EXPECT_EQ(t.first_with_role(NodeRole::LoggingServer)->id, "logs");
}

TEST(Reachability, EgressOnlyFromJump) {
  const auto t = sme();
  EXPECT_EQ(reachable(t, "jump", kPublicResolver, 53), Reachability::Allowed);
  EXPECT_EQ(reachable(t, "web", kPublicResolver, 53), Reachability::DeniedByFirewall);
  EXPECT_EQ(reachable(t, "jump", t.node("web").primary_address(), 22), Reachability::Allowed);
}

TEST(Reachability, VpnNeedsAddressOrTunnel) {
  const auto t = sme();
  const auto vpnhost = t.node("vpnhost").primary_address();
  EXPECT_EQ(reachable(t, "jump", vpnhost, 445), Reachability::NoRoute);
  EXPECT_EQ(reachable(t, "jump", vpnhost, 445, true), Reachability::Allowed);
  EXPECT_EQ(reachable(t, "vpnserver", vpnhost, 445), Reachability::Allowed);
  EXPECT_EQ(reachable(t, "vpnhost", t.node("web").primary_address(), 80), Reachability::NoRoute);
}

TEST(Reachability, ServerLanGuardedInLarge) {
  const auto t = large();
  const auto app = t.node("app").primary_address();
  const auto logs = t.node("logs").primary_address();
  EXPECT_EQ(reachable(t, "jump", app, 8080), Reachability::DeniedByFirewall);
  EXPECT_EQ(reachable(t, "ws2", app, 8080), Reachability::Allowed);
  EXPECT_EQ(reachable(t, "vpnclient", app, 8080), Reachability::Allowed);
  EXPECT_EQ(reachable(t, "decoy1", logs, 514), Reachability::Allowed);
  EXPECT_EQ(reachable(t, "decoy1", logs, 22), Reachability::DeniedByFirewall);
}

TEST(Validate, RejectsBrokenTopologies) {
  {
    auto t = sme();
    t.nodes[1].addresses[0].addr = t.nodes[0].addresses[0].addr;
    expect_invalid(t, "reused");
  }
  {
    auto t = sme();
    t.subnets.push_back({SubnetLabel::EXTERNAL, Cidr::parse("192.168.0.0/24")});
    expect_invalid(t, "EXTERNAL is implicit");
  }
  {
    auto t = sme();
    t.subnets.push_back({SubnetLabel::LAN2, Cidr::parse("10.0.2.128/25")});
    expect_invalid(t, "overlaps");
  }
  {
    auto t = sme();
    t.nodes[0].addresses[0].addr = Ipv4(172, 16, 0, 1);
    expect_invalid(t, "not inside declared subnet");
  }
  {
    auto t = sme();
    t.nodes.erase(t.nodes.begin());  // jump
    expect_invalid(t, "JumpHost");
  }
  {
    auto t = sme();
    for (auto& n : t.nodes) {
      if (n.id == "web") n.internet_egress = true;
    }
    expect_invalid(t, "internet_egress");
  }
  {
    auto t = sme();
    t.capture_scope.clear();
    expect_invalid(t, "capture_scope");
  }
  {
    auto t = sme();
    t.nodes[1].services.push_back({ServiceKind::Smb, 22, true});
    expect_invalid(t, "port 22");
  }
}

TEST(HostsIn, AscendingAndComplete) {
  const auto t = sme();
  const auto hosts = hosts_in(t, Cidr::parse("10.0.2.0/24"));
  EXPECT_EQ(hosts.size(), 10u);
  EXPECT_TRUE(std::is_sorted(hosts.begin(), hosts.end(),
                             [](const auto& a, const auto& b) { return a.second < b.second; }));
  EXPECT_THROW(hosts_in(t, Cidr::parse("10.9.0.0/24")), ContractError);
}

TEST(Names, RoundTrip) {
  for (auto r : {NodeRole::JumpHost, NodeRole::VpnHost, NodeRole::Workstation, NodeRole::DecoyHost}) {
    EXPECT_EQ(parse_node_role(to_string(r)), r);
  }
  for (auto k : {ServiceKind::Ssh, ServiceKind::WebApp, ServiceKind::VpnGateway, ServiceKind::Ntp}) {
    EXPECT_EQ(parse_service_kind(to_string(k)), k);
  }
  EXPECT_EQ(parse_preset("LargeEnterprise"), Preset::LargeEnterprise);
  EXPECT_EQ(default_port(ServiceKind::WebApp), 8080);
  EXPECT_THROW(parse_preset("Huge"), ParseError);
}
