// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "rangesim/engine.hpp"
#include "support.hpp"

using namespace rangesim;
using namespace rangesim::testing;

namespace {

Engine quiet_engine(Preset preset = Preset::SME, std::uint64_t seed = 1) {
  return Engine(materialize(quiet_doc(preset, seed)));
}

std::vector<std::uint8_t> flag_bits(const std::vector<PacketEvent>& v) {
  std::vector<std::uint8_t> out;
  for (const auto& p : v) out.push_back(p.flags.bits);
  return out;
}

std::vector<Credential> wrong(std::size_t n) {
  std::vector<Credential> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back({"root", "nope" + std::to_string(i)});
  return out;
}

}  // namespace

TEST(TcpTemplates, OpenIsThreeWayHandshake) {
  auto e = quiet_engine();
  const auto web = addr_of(e.topology(), "web");
  const auto c = e.tcp_connect("jump", web, 22, seconds(1));
  EXPECT_EQ(c.outcome, ConnOutcome::Open);
  const auto& pk = e.emitted();
  ASSERT_EQ(pk.size(), 3u);
  EXPECT_EQ(flag_bits(pk), (std::vector<std::uint8_t>{TcpFlags::SYN, TcpFlags::SYN | TcpFlags::ACK, TcpFlags::ACK}));
  EXPECT_EQ(pk[0].src, addr_of(e.topology(), "jump"));
  EXPECT_EQ(pk[0].dst, web);
  EXPECT_EQ(pk[1].src, web);
  EXPECT_EQ(pk[1].dst_port, pk[0].src_port);
  for (std::size_t i = 1; i < pk.size(); ++i) {
    const auto gap = pk[i].t - pk[i - 1].t;
    EXPECT_GE(gap, kLinkLatency);
    EXPECT_LT(gap, kLinkLatency * 2);
    EXPECT_EQ(pk[i].conn, pk[0].conn);
  }
  EXPECT_EQ(pk[0].size, packet_size::kSyn);
  EXPECT_EQ(c.t, pk.back().t);
}

TEST(TcpTemplates, RefusedGetsRstAck) {
  auto e = quiet_engine();
  const auto c = e.tcp_connect("jump", addr_of(e.topology(), "web"), 445, seconds(1));
  EXPECT_EQ(c.outcome, ConnOutcome::Refused);
  ASSERT_EQ(e.emitted().size(), 2u);
  EXPECT_EQ(flag_bits(e.emitted()), (std::vector<std::uint8_t>{TcpFlags::SYN, TcpFlags::RST | TcpFlags::ACK}));
}

TEST(TcpTemplates, FilteredTimesOut) {
  auto e = quiet_engine();
  const auto c = e.tcp_connect("web", Ipv4(1, 1, 1, 1), 80, seconds(1));
  EXPECT_EQ(c.outcome, ConnOutcome::Filtered);
  ASSERT_EQ(e.emitted().size(), 1u);
  EXPECT_TRUE(e.emitted()[0].flags.is_syn_only());
  EXPECT_EQ(c.t, seconds(1) + kFilteredTimeout);

  // An unassigned address inside the LAN also stays silent.
  const auto c2 = e.tcp_connect("jump", Ipv4(10, 0, 2, 255), 22, seconds(5));
  EXPECT_EQ(c2.outcome, ConnOutcome::Filtered);
  EXPECT_EQ(e.emitted().size(), 2u);
}

TEST(TcpTemplates, ProbeResetsOpenPorts) {
  auto e = quiet_engine();
  const auto c = e.tcp_probe("jump", addr_of(e.topology(), "web"), 80, seconds(1));
  EXPECT_EQ(c.outcome, ConnOutcome::Open);
  EXPECT_EQ(flag_bits(e.emitted()),
            (std::vector<std::uint8_t>{TcpFlags::SYN, TcpFlags::SYN | TcpFlags::ACK, TcpFlags::ACK, TcpFlags::RST}));
  EXPECT_EQ(e.emitted().back().src, addr_of(e.topology(), "jump"));
}

TEST(TcpTemplates, DisabledServiceRefuses) {
  auto e = quiet_engine();
  const auto web = addr_of(e.topology(), "web");
  e.disable_service("web", 80, seconds(10));
  EXPECT_EQ(e.tcp_connect("jump", web, 80, seconds(9)).outcome, ConnOutcome::Open);
  EXPECT_EQ(e.tcp_connect("jump", web, 80, seconds(10)).outcome, ConnOutcome::Refused);
}

TEST(Ssh, AttemptArithmetic) {
  for (std::size_t n = 1; n <= kMaxSshAttempts; ++n) {
    auto e = quiet_engine();
    const auto creds = wrong(n);
    const auto r = e.ssh_connection("jump", addr_of(e.topology(), "web"), creds, seconds(1));
    EXPECT_FALSE(r.success);
    EXPECT_EQ(r.attempts_made, n);
    std::vector<PacketEvent> pk;
    for (const auto& p : e.emitted()) {
      if (p.proto == Proto::Tcp) pk.push_back(p);
    }
    // handshake, banner, kex, n x (attempt, result), client RST
    ASSERT_EQ(pk.size(), 3 + 2 + 2 * n + 1);
    // One forwarded syslog datagram per failure.
    EXPECT_EQ(e.emitted().size() - pk.size(), n);
    EXPECT_EQ(count_if(pk, [](const PacketEvent& p) { return p.app == AppKind::SshAuthAttempt; }), n);
    EXPECT_EQ(count_if(pk, [](const PacketEvent& p) { return p.app == AppKind::SshDhKex; }), 1u);
    EXPECT_EQ(pk.back().flags.bits, TcpFlags::RST);
    EXPECT_EQ(pk.back().src, addr_of(e.topology(), "jump"));
    ASSERT_EQ(e.syslog_events().size(), n);
    for (const auto& s : e.syslog_events()) {
      EXPECT_EQ(s.facility, facility::kAuth);
      EXPECT_EQ(s.severity, 5);
      EXPECT_EQ(s.host, "web");
      EXPECT_EQ(s.message.rfind("Failed password for root from ", 0), 0u);
    }
  }
}

TEST(Ssh, RejectsOutOfRangeBatches) {
  auto e = quiet_engine();
  const auto web = addr_of(e.topology(), "web");
  EXPECT_THROW(e.ssh_connection("jump", web, wrong(0), seconds(1)), ContractError);
  EXPECT_THROW(e.ssh_connection("jump", web, wrong(7), seconds(1)), ContractError);
  EXPECT_TRUE(e.emitted().empty());
}

TEST(Ssh, AcceptsWeakAndAdminPasswords) {
  auto e = quiet_engine();
  const auto web = addr_of(e.topology(), "web");
  const auto* v = e.scenario().find_vulnerability("web", VulnId::WeakSshPassword);
  ASSERT_NE(v, nullptr);
  const auto& weak = std::get<WeakSshParams>(v->params);
  std::vector<Credential> creds = {{weak.username, "x"}, {weak.username, weak.password}, {weak.username, "y"}};
  auto r = e.ssh_connection("jump", web, creds, seconds(1));
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.attempts_made, 2u);
  const auto& last = *std::find_if(e.emitted().rbegin(), e.emitted().rend(),
                                   [](const PacketEvent& p) { return p.proto == Proto::Tcp; });
  EXPECT_EQ(last.app, AppKind::SshAuthResult);
  EXPECT_EQ(e.syslog_events().back().severity, 6);

  std::vector<Credential> admin = {{std::string(kAdminUser), e.database().admin_password}};
  r = e.ssh_connection("jump", addr_of(e.topology(), "dns"), admin, seconds(5));
  EXPECT_TRUE(r.success);
}

TEST(Dns, InternalNamesAndPtr) {
  auto e = quiet_engine();
  const auto dns = addr_of(e.topology(), "dns");
  auto r = e.dns_query("jump", dns, "www.corp.example", false, seconds(1));
  EXPECT_TRUE(r.responded);
  EXPECT_EQ(r.answer, addr_of(e.topology(), "web").str());

  const auto app = addr_of(e.topology(), "app");
  const std::string rev = std::to_string(app.octet(3)) + "." + std::to_string(app.octet(2)) + "." +
                          std::to_string(app.octet(1)) + "." + std::to_string(app.octet(0)) + ".in-addr.arpa";
  r = e.dns_query("jump", dns, rev, true, seconds(2));
  EXPECT_EQ(r.answer, "app.corp.example");

  r = e.dns_query("jump", dns, "ghost.corp.example", false, seconds(3));
  EXPECT_TRUE(r.responded);
  EXPECT_FALSE(r.answer.has_value());
  EXPECT_EQ(e.emitted().back().meta.at("answer"), "NXDOMAIN");
}

TEST(Dns, PoisonedAnswerExpires) {
  auto e = quiet_engine();
  const auto dns = addr_of(e.topology(), "dns");
  e.poison_dns("www.corp.example", Ipv4(6, 6, 6, 6), seconds(10));
  EXPECT_EQ(e.dns_query("jump", dns, "www.corp.example", false, seconds(20)).answer, "6.6.6.6");
  EXPECT_EQ(e.dns_query("jump", dns, "www.corp.example", false, seconds(10) + kPoisonTtl + seconds(1)).answer,
            addr_of(e.topology(), "web").str());
}

TEST(Dns, PublicResolverNeedsEgress) {
  auto e = quiet_engine();
  EXPECT_TRUE(e.dns_query("jump", kPublicResolver, "example.org", false, seconds(1)).responded);
  EXPECT_FALSE(e.dns_query("web", kPublicResolver, "example.org", false, seconds(2)).responded);
}

TEST(Syslog, ClockSkewAndForwarding) {
  auto e = quiet_engine();
  e.syslog("vpnhost", facility::kAuth, 5, "sshd", "hello", seconds(3));
  e.syslog("logs", facility::kDaemon, 6, "rsyslogd", "local", seconds(4));
  const auto& s = e.syslog_events();
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].received, seconds(3));
  EXPECT_EQ(s[0].t, seconds(3) + ms(1500));
  EXPECT_EQ(s[1].t, s[1].received);
  // Only the remote line is carried over the network, relayed via the VPN
  // server's LAN address.
  ASSERT_EQ(e.emitted().size(), 1u);
  const auto& fwd = e.emitted()[0];
  EXPECT_EQ(fwd.app, AppKind::SyslogMsg);
  EXPECT_EQ(fwd.dst, addr_of(e.topology(), "logs"));
  EXPECT_EQ(fwd.src, e.topology().node("vpnserver").address_in(SubnetLabel::LAN1));
}

TEST(Background, IndependentOfClockChunking) {
  auto doc = default_doc(Preset::SME, 4);
  doc.employees = 15;
  Engine once{materialize(doc)};
  Engine stepped{materialize(doc)};
  once.advance_to(seconds(120));
  for (int i = 1; i <= 240; ++i) stepped.advance_to(ms(500) * i);
  ASSERT_FALSE(once.emitted().empty());
  EXPECT_EQ(once.emitted(), stepped.emitted());
  EXPECT_EQ(once.syslog_events(), stepped.syslog_events());
  EXPECT_EQ(once.capture(), stepped.capture());
}

TEST(Background, AttackerActivityDoesNotShiftIt) {
  auto doc = default_doc(Preset::SME, 4);
  Engine plain{materialize(doc)};
  Engine busy{materialize(doc)};
  plain.advance_to(seconds(60));
  busy.advance_to(seconds(30));
  busy.tcp_connect("jump", addr_of(busy.topology(), "web"), 22, seconds(30));
  busy.advance_to(seconds(60));
  auto background = [](const Engine& e) {
    std::vector<std::tuple<SimTime, Ipv4, Ipv4, std::uint16_t, AppKind>> out;
    for (const auto& p : e.emitted()) {
      if (p.src != addr_of(e.topology(), "jump") && p.dst != addr_of(e.topology(), "jump")) {
        out.emplace_back(p.t, p.src, p.dst, p.dst_port, p.app);
      }
    }
    return out;
  };
  EXPECT_EQ(background(plain), background(busy));
}

TEST(Background, NoSyslogFromBenignFlows) {
  auto doc = default_doc(Preset::LargeEnterprise, 2);
  Engine e{materialize(doc)};
  e.advance_to(seconds(300));
  EXPECT_TRUE(e.syslog_events().empty());
  EXPECT_GT(e.emitted().size(), 100u);
}

TEST(Engine, ClockNeverRunsBackwards) {
  auto e = quiet_engine();
  e.advance_to(seconds(10));
  e.advance_to(seconds(5));
  EXPECT_EQ(e.now(), seconds(10));
}

TEST(Engine, SeqIsStrictlyIncreasing) {
  Engine e{materialize(default_doc(Preset::SME, 3))};
  e.advance_to(seconds(200));
  std::uint64_t last = 0;
  for (const auto& p : e.emitted()) {
    EXPECT_GT(p.seq, last);
    last = p.seq;
  }
}

TEST(Capture, OnlyInScopePackets) {
  auto e = quiet_engine();
  const auto vpnhost = e.topology().node("vpnhost").primary_address();
  e.tcp_connect("vpnserver", vpnhost, 445, seconds(1));
  e.tcp_connect("jump", addr_of(e.topology(), "web"), 80, seconds(2));
  const auto tr = e.capture();
  EXPECT_EQ(e.emitted().size(), 6u);
  ASSERT_EQ(tr.packets.size(), 3u);
  for (const auto& p : tr.packets) EXPECT_EQ(p.dst_port == 80 ? p.dst : p.src, addr_of(e.topology(), "web"));
}

TEST(Files, ManifestsAndChunks) {
  EXPECT_FALSE(file_manifest(NodeRole::FileServer).empty());
  EXPECT_EQ(employee_columns().size(), 8u);
  EmployeeRecord r;
  r.employee_id = 7;
  r.vpn_password = "pw";
  EXPECT_EQ(employee_field(r, "id"), "7");
  EXPECT_EQ(employee_field(r, "vpn_password"), "pw");
  EXPECT_THROW(employee_field(r, "salary"), ContractError);
}
