// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <set>

#include "support.hpp"

using namespace rangesim;
using namespace rangesim::testing;

namespace {

const Cidr kSmeLan = Cidr::parse("10.0.2.0/24");

AttackSession quiet_session(Preset preset = Preset::SME, std::uint64_t seed = 1) {
  return AttackSession(materialize(quiet_doc(preset, seed)));
}

bool is_ptr(const PacketEvent& p) {
  return p.app == AppKind::DnsQuery && p.dst == kPublicResolver && p.meta.contains("qtype") &&
         p.meta.at("qtype") == "PTR";
}

std::vector<std::string> junk_words(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("zz-not-a-password-" + std::to_string(i));
  return out;
}

std::size_t ceil6(std::size_t n) { return (n + 5) / 6; }

/// First seed whose lateral move from the jump host onto decoy1 succeeds.
std::pair<std::unique_ptr<AttackSession>, bool> session_on_decoy() {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto s = std::make_unique<AttackSession>(materialize(quiet_doc(Preset::SME, seed)));
    const auto out = s->execute(AttackAction::lateral_move(addr_of(*s, "decoy1")), seconds(1));
    if (out.success) return {std::move(s), true};
  }
  return {nullptr, false};
}

}  // namespace

TEST(Scan, ShapeOnSme) {
  auto s = quiet_session();
  const auto out = s.execute(AttackAction::scan(kSmeLan), seconds(10));
  const auto& pk = s.engine().emitted();
  const auto jump = addr_of(s, "jump");
  const auto syns = count_if(pk, [&](const PacketEvent& p) { return p.src == jump && p.flags.is_syn_only(); });
  EXPECT_EQ(syns, 254u * kDefaultScanPorts.size());

  // Every assigned LAN address except the scanner's own.
  std::set<Ipv4> expected;
  for (const auto& [id, a] : hosts_in(s.engine().topology(), kSmeLan)) {
    if (id != "jump") expected.insert(a);
  }
  std::set<Ipv4> found;
  for (const auto& h : out.gained.hosts) found.insert(h.address);
  EXPECT_EQ(found, expected);
  EXPECT_TRUE(out.success);
  EXPECT_EQ(count_if(pk, is_ptr), expected.size());

  for (const auto& h : out.gained.hosts) {
    const auto* node = s.engine().topology().node_at(h.address);
    std::set<std::uint16_t> ports;
    for (const auto& svc : node->services) {
      if (std::find(kDefaultScanPorts.begin(), kDefaultScanPorts.end(), svc.port) != kDefaultScanPorts.end()) {
        ports.insert(svc.port);
      }
    }
    std::set<std::uint16_t> open;
    for (const auto& [port, banner] : h.open_ports) open.insert(port);
    EXPECT_EQ(open, ports) << node->id;
  }
  EXPECT_EQ(s.state().known_hosts.size(), expected.size());
}

TEST(Scan, ProbeSpacing) {
  auto s = quiet_session();
  s.execute(AttackAction::scan(kSmeLan, {22}), seconds(10));
  std::vector<SimTime> t;
  for (const auto& p : s.engine().emitted()) {
    if (p.flags.is_syn_only()) t.push_back(p.t);
  }
  ASSERT_EQ(t.size(), 254u);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i], seconds(10) + kScanProbeSpacing * static_cast<int>(i));
}

TEST(Scan, NoPtrWithoutEgress) {
  auto [s, ok] = session_on_decoy();
  ASSERT_TRUE(ok);
  EXPECT_EQ(s->state().position, "decoy1");
  const auto from = s->engine().next_seq();
  const auto out = s->execute(AttackAction::scan(kSmeLan), seconds(60));
  const auto pk = since(s->engine(), from);
  const auto decoy = addr_of(*s, "decoy1");
  EXPECT_EQ(count_if(pk, [&](const PacketEvent& p) { return p.src == decoy && p.flags.is_syn_only(); }),
            254u * kDefaultScanPorts.size());
  EXPECT_EQ(count_if(pk, is_ptr), 0u);
  EXPECT_TRUE(out.success);
}

TEST(Scan, UnroutedSubnetFails) {
  auto s = quiet_session();
  const auto out = s.execute(AttackAction::scan(Cidr::parse("10.8.0.0/24")), seconds(1));
  EXPECT_FALSE(out.success);
  EXPECT_TRUE(s.engine().emitted().empty());
  EXPECT_TRUE(s.trace().labels.empty());
}

class BruteForceArithmetic : public ::testing::TestWithParam<std::size_t> {};

TEST_P(BruteForceArithmetic, FailureCounts) {
  const std::size_t n = GetParam();
  auto s = quiet_session();
  const auto web = addr_of(s, "web");
  const auto out = s.execute(AttackAction::brute_force_words(web, "webmaster", junk_words(n)), seconds(5));
  EXPECT_FALSE(out.success);
  const auto& pk = s.engine().emitted();
  std::set<std::uint64_t> conns;
  for (const auto& p : pk) {
    if (p.flags.is_syn_only() && p.dst == web && p.dst_port == 22) conns.insert(p.conn);
  }
  EXPECT_EQ(conns.size(), ceil6(n));
  EXPECT_EQ(count_if(pk, [](const PacketEvent& p) { return p.app == AppKind::SshAuthAttempt; }), n);
  EXPECT_EQ(count_if(pk, [](const PacketEvent& p) { return p.proto == Proto::Tcp && p.flags.has(TcpFlags::RST); }),
            ceil6(n));
  EXPECT_EQ(s.engine().syslog_events().size(), n);
  EXPECT_NE(out.summary.find(std::to_string(n) + " attempts over " + std::to_string(ceil6(n)) + " connection"),
            std::string::npos)
      << out.summary;
}

INSTANTIATE_TEST_SUITE_P(Sizes, BruteForceArithmetic, ::testing::Values(1, 5, 6, 7, 12, 13, 100, 1000));

TEST(BruteForce, StopsAtWeakPassword) {
  for (std::uint64_t seed : {1, 2, 3}) {
    auto s = quiet_session(Preset::SME, seed);
    const auto* v = s.engine().scenario().find_vulnerability("web", VulnId::WeakSshPassword);
    const auto rank = std::get<WeakSshParams>(v->params).rank;
    const auto web = addr_of(s, "web");
    const auto out = s.execute(AttackAction::brute_force(web, "webmaster"), seconds(5));
    ASSERT_TRUE(out.success);
    const auto& pk = s.engine().emitted();
    EXPECT_EQ(count_if(pk, [](const PacketEvent& p) { return p.app == AppKind::SshAuthAttempt; }), rank);
    EXPECT_EQ(count_if(pk, [](const PacketEvent& p) { return p.flags.has(TcpFlags::RST); }), ceil6(rank) - 1);
    ASSERT_EQ(out.gained.footholds.size(), 1u);
    EXPECT_EQ(out.gained.footholds[0].privilege, Privilege::Admin);
    EXPECT_EQ(out.gained.footholds[0].credential->password, std::get<WeakSshParams>(v->params).password);
    EXPECT_TRUE(s.state().has_loot(LootKind::Credential));
  }
}

TEST(BruteForce, ClosedPortStopsEarly) {
  auto s = quiet_session();
  const auto out = s.execute(AttackAction::brute_force_words(addr_of(s, "logs"), "root", junk_words(60)), seconds(1));
  EXPECT_FALSE(out.success);
  EXPECT_EQ(count_if(s.engine().emitted(), [](const PacketEvent& p) { return p.flags.is_syn_only(); }), 1u);
}

TEST(Sqli, ProbeThenDump) {
  auto s = quiet_session();
  const auto app = addr_of(s, "app");
  EXPECT_THROW(s.execute(AttackAction::sqli_dump(app), seconds(1)), ContractError);
  EXPECT_TRUE(s.steps().empty());

  auto probe = s.execute(AttackAction::sqli_probe(app), seconds(1));
  EXPECT_TRUE(probe.success);
  auto gets = [&] {
    return count_if(s.engine().emitted(), [](const PacketEvent& p) { return p.app == AppKind::HttpGet; });
  };
  EXPECT_EQ(gets(), kSqliProbeRequests);

  const auto dump = s.execute(AttackAction::sqli_dump(app));
  ASSERT_TRUE(dump.success) << dump.summary;
  const auto rows = s.engine().database().records.size();
  EXPECT_EQ(gets(), kSqliProbeRequests + 5 + employee_columns().size() * rows);
  ASSERT_EQ(dump.gained.loot.size(), rows);
  for (std::size_t k = 0; k < rows; ++k) {
    const auto& rec = s.engine().database().records[k];
    const auto& f = dump.gained.loot[k].fields;
    for (auto col : employee_columns()) EXPECT_EQ(f.at(std::string(col)), employee_field(rec, col));
    EXPECT_EQ(dump.gained.loot[k].provenance, 1u);
    EXPECT_EQ(dump.gained.loot[k].source, ActionKind::SqliDump);
  }
}

TEST(Sqli, ProbeFindsNothingOnPlainWebsite) {
  auto s = quiet_session();
  const auto out = s.execute(AttackAction::sqli_probe(addr_of(s, "web"), 80), seconds(1));
  EXPECT_FALSE(out.success);
  EXPECT_THROW(s.execute(AttackAction::sqli_dump(addr_of(s, "web"), 80)), ContractError);
}

TEST(Vpn, RequiresLootedCredential) {
  auto s = quiet_session();
  const auto server = addr_of(s, "vpnserver");
  const auto& rec = s.engine().database().records.front();
  EXPECT_THROW(s.execute(AttackAction::vpn_connect(server, rec.vpn_username, rec.vpn_password), seconds(1)),
               ContractError);
  EXPECT_TRUE(s.engine().emitted().empty());

  const auto app = addr_of(s, "app");
  s.execute(AttackAction::sqli_probe(app), seconds(1));
  s.execute(AttackAction::sqli_dump(app));
  const auto out = s.execute(AttackAction::vpn_connect(server, rec.vpn_username, rec.vpn_password));
  ASSERT_TRUE(out.success) << out.summary;
  ASSERT_TRUE(out.gained.tunnel.has_value());
  EXPECT_TRUE(Cidr::parse("10.8.0.0/24").contains(out.gained.tunnel->address));
  EXPECT_EQ(s.state().tunnels.size(), 1u);

  // Traffic into the VPN now rides the tunnel and shows up on the carrier.
  const auto from = s.engine().next_seq();
  const auto vpnhost = s.engine().topology().node("vpnhost").primary_address();
  const auto scan = s.execute(AttackAction::scan(Cidr::parse("10.8.0.0/24"), {445}));
  EXPECT_TRUE(scan.success);
  const auto pk = since(s.engine(), from);
  EXPECT_GT(count_if(pk, [](const PacketEvent& p) { return p.app == AppKind::VpnData; }), 0u);
  EXPECT_TRUE(std::any_of(scan.gained.hosts.begin(), scan.gained.hosts.end(),
                          [&](const KnownHost& h) { return h.address == vpnhost; }));
}

TEST(Chunks, Properties) {
  for (std::uint64_t bytes : {0ull, 1ull, 39ull, 40ull, 1400ull, 1401ull, 1439ull, 1440ull, 2800ull, 65536ull,
                              1048576ull}) {
    const auto c = chunk_sizes(bytes);
    std::uint64_t sum = 0;
    for (auto x : c) sum += x;
    EXPECT_EQ(sum, bytes);
    for (std::size_t i = 0; i + 1 < c.size(); ++i) EXPECT_EQ(c[i], packet_size::kChunk);
    if (c.size() > 1) {
      EXPECT_GE(c.back(), 40u);
      EXPECT_LE(c.back(), packet_size::kChunk + 39);
    }
  }
  EXPECT_EQ(chunk_sizes(1401), std::vector<std::uint32_t>{1401});
  EXPECT_EQ(chunk_sizes(1440), (std::vector<std::uint32_t>{1400, 40}));
  EXPECT_TRUE(chunk_sizes(0).empty());
}

TEST(Escalation, AdminFootholdIsANoOp) {
  auto s = quiet_session();
  const auto web = addr_of(s, "web");
  ASSERT_TRUE(s.execute(AttackAction::brute_force(web, "webmaster"), seconds(1)).success);
  const auto before = s.state();
  const auto out = s.execute(AttackAction::targeted(ActionKind::PrivilegeEscalate, web));
  EXPECT_TRUE(out.success);
  EXPECT_TRUE(out.gained.empty());
  EXPECT_EQ(s.state().footholds, before.footholds);
}

TEST(Lateral, OnlySoftTargetsFall) {
  auto s = quiet_session();
  const auto out = s.execute(AttackAction::lateral_move(addr_of(s, "files")), seconds(1));
  EXPECT_FALSE(out.success);
  EXPECT_EQ(count_if(s.engine().emitted(), [](const PacketEvent& p) { return p.flags.is_syn_only(); }), 1u);
}

TEST(Labels, OnePerCapturedAction) {
  auto s = quiet_session();
  s.execute(AttackAction::scan(Cidr::parse("10.8.0.0/24")), seconds(1));  // nothing emitted
  s.execute(AttackAction::scan(kSmeLan, {22}), seconds(2));
  s.execute(AttackAction::send_phish("ceo@corp.example", "all@corp.example"));
  const auto tr = s.trace();
  ASSERT_EQ(tr.labels.size(), 2u);
  EXPECT_EQ(tr.labels[0].kind, ActionKind::ScanSubnet);
  EXPECT_EQ(tr.labels[0].attacker, "jump");
  EXPECT_EQ(tr.labels[0].start, seconds(2));
  EXPECT_EQ(tr.labels[1].kind, ActionKind::SendPhish);
  EXPECT_EQ(s.steps().size(), 3u);
}

TEST(Actions, MalformedParamsRejected) {
  auto s = quiet_session();
  AttackAction bad;
  bad.kind = ActionKind::SqliProbe;
  bad.params = ScanParams{kSmeLan, {}};
  EXPECT_THROW(s.execute(bad), ContractError);
  EXPECT_THROW(s.execute(AttackAction::brute_force(addr_of(s, "web"), "x", 0)), ContractError);
  EXPECT_TRUE(s.steps().empty());
}

TEST(Replay, ReproducesOutcomes) {
  auto doc = default_doc(Preset::LargeEnterprise, 3);
  doc.attacker.mode = AttackerMode::Script;
  doc.attacker.profile = Profile::BlackHat;
  const auto r = run_scenario(doc);
  ASSERT_FALSE(r.recording.steps.empty());
  const auto outcomes = replay(r.recording);
  ASSERT_EQ(outcomes.size(), r.recording.steps.size());
  for (std::size_t i = 0; i < outcomes.size(); ++i) EXPECT_EQ(outcomes[i], r.recording.steps[i].outcome) << i;
}
