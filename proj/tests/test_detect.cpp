// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "support.hpp"

using namespace rangesim;
using namespace rangesim::testing;

namespace {

void expect_matches_recount(const Trace& t, const std::vector<FeatureWindow>& windows, const DetectorConfig& c) {
  const auto w = c.width();
  const std::size_t expected = t.packets.empty() ? 0 : static_cast<std::size_t>(t.packets.back().t / w) + 1;
  ASSERT_EQ(windows.size(), expected);
  std::set<Ipv4> addrs;
  for (const auto& p : t.packets) {
    addrs.insert(p.src);
    addrs.insert(p.dst);
  }
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto lo = w * static_cast<std::int64_t>(k);
    ASSERT_EQ(windows[k].start, lo);
    ASSERT_EQ(windows[k].end, lo + w);
    for (auto a : addrs) {
      for (bool by_source : {true, false}) {
        const auto& m = by_source ? windows[k].by_source : windows[k].by_destination;
        auto it = m.find(a);
        for (auto f : kAllFeatures) {
          const std::uint64_t got = it == m.end() ? 0 : it->second[f];
          ASSERT_EQ(got, recount_feature(t, lo, lo + w, a, by_source, f))
              << "window " << k << " " << a.str() << (by_source ? " src " : " dst ") << to_string(f);
        }
      }
    }
  }
}

Trace shipped(const std::string& file) {
  return run_scenario(parse_scenario(slurp(scenario_path(file)))).trace;
}

}  // namespace

TEST(Windows, MatchIndependentRecount) {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto t = random_trace(seed, 40 + seed * 7, seconds(60));
    DetectorConfig c;
    c.window_s = 1.0 + static_cast<double>(seed % 4) * 2.5;
    expect_matches_recount(t, window_features(t, c), c);
  }
}

TEST(Windows, MatchRecountOnSimulatedTrace) {
  auto doc = default_doc(Preset::SME, 2);
  doc.timing.duration_s = 90;
  doc.attacker.mode = AttackerMode::Actions;
  doc.timing.attack_start_s = 30;
  doc.attacker.actions = {AttackAction::scan(Cidr::parse("10.0.2.0/24"), {22, 80})};
  const auto t = run_scenario(doc).trace;
  DetectorConfig c;
  expect_matches_recount(t, window_features(t, c), c);
}

TEST(Windows, EmptyTraceHasNoWindows) {
  EXPECT_TRUE(window_features(Trace{}, DetectorConfig{}).empty());
  EXPECT_TRUE(detect_all(Trace{}, DetectorConfig{}).empty());
}

TEST(Windows, EmptyWindowsIncluded) {
  Trace t;
  PacketEvent p;
  p.t = seconds(95);
  p.flags.bits = TcpFlags::SYN;
  t.packets.push_back(p);
  const auto w = window_features(t, DetectorConfig{});
  ASSERT_EQ(w.size(), 10u);
  for (std::size_t k = 0; k < 9; ++k) EXPECT_TRUE(w[k].by_source.empty());
  EXPECT_EQ(w[9].by_source.begin()->second[Feature::ConnRequests], 1u);
}

TEST(Kernels, ParallelEqualsSerial) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto t = random_trace(seed * 31, 3000, seconds(600));
    DetectorConfig c;
    c.baseline_windows = 5;
    c.min_count = 2;
    c.threshold_k = 1.5;
    const auto par = window_features(t, c);
    const auto ser = window_features_serial(t, c);
    ASSERT_EQ(par, ser);
    EXPECT_EQ(detect_scan(par, c), detect_scan_serial(ser, c));
    EXPECT_EQ(detect_bruteforce(par, c), detect_bruteforce_serial(ser, c));
    EXPECT_EQ(detect_sqldump(par, c), detect_sqldump_serial(ser, c));
  }
}

TEST(Score, HandComputedZ) {
  // Subject counts 2, 4, 4, 4, 5, 5, 7, 9 then 30 in the scored window.
  const std::vector<std::uint64_t> counts = {2, 4, 4, 4, 5, 5, 7, 9, 30};
  std::vector<FeatureWindow> w(counts.size());
  const Ipv4 a(10, 0, 0, 1);
  for (std::size_t k = 0; k < counts.size(); ++k) w[k].by_source[a][Feature::Rst] = counts[k];
  DetectorConfig c;
  c.baseline_windows = 8;
  const auto fs = score_feature(w, 8, a, true, Feature::Rst, c);
  const double mean = 5.0;
  const double sd = std::sqrt(32.0 / 7.0);
  EXPECT_EQ(fs.count, 30u);
  EXPECT_DOUBLE_EQ(fs.mean, mean);
  EXPECT_DOUBLE_EQ(fs.stddev, sd);
  EXPECT_DOUBLE_EQ(fs.score, (30.0 - mean) / sd);
}

TEST(Score, StdFloorOfOne) {
  std::vector<FeatureWindow> w(4);
  const Ipv4 a(10, 0, 0, 1);
  w[3].by_destination[a][Feature::HttpGet] = 25;
  DetectorConfig c;
  c.baseline_windows = 3;
  const auto fs = score_feature(w, 3, a, false, Feature::HttpGet, c);
  EXPECT_EQ(fs.stddev, 0.0);
  EXPECT_DOUBLE_EQ(fs.score, 25.0);
  // Only the windows that exist count towards the baseline.
  const auto early = score_feature(w, 1, a, false, Feature::HttpGet, c);
  EXPECT_EQ(early.count, 0u);
  EXPECT_DOUBLE_EQ(early.score, 0.0);
}

TEST(Rules, MinCountFloor) {
  std::vector<FeatureWindow> w(4);
  const Ipv4 a(10, 0, 0, 1);
  w[3].by_destination[a][Feature::HttpGet] = 19;
  w[3].by_destination[a][Feature::ConnRequests] = 19;
  DetectorConfig c;
  c.baseline_windows = 3;
  EXPECT_TRUE(detect_sqldump(w, c).empty());
  w[3].by_destination[a][Feature::HttpGet] = 20;
  w[3].by_destination[a][Feature::ConnRequests] = 20;
  const auto v = detect_sqldump(w, c);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].subject, a);
  EXPECT_FALSE(v[0].subject_is_source);
  EXPECT_DOUBLE_EQ(v[0].score, 20.0);
  EXPECT_EQ(v[0].features.size(), 2u);
}

TEST(Rules, BaselineWindowsAreNotJudged) {
  std::vector<FeatureWindow> w(3);
  w[0].by_source[Ipv4(1, 1, 1, 1)][Feature::DnsQueries] = 1000;
  DetectorConfig c;
  c.baseline_windows = 3;
  EXPECT_TRUE(detect_scan(w, c).empty());
}

TEST(Evaluate, Arithmetic) {
  const std::vector<Label> labels = {{seconds(100), seconds(105), ActionKind::ScanSubnet, "jump"},
                                     {seconds(300), seconds(310), ActionKind::SqliDump, "jump"},
                                     {seconds(400), seconds(401), ActionKind::SshBruteForce, "jump"}};
  auto v = [](VerdictKind k, int s) {
    Verdict x;
    x.kind = k;
    x.window_start = seconds(s);
    x.window_end = seconds(s + 10);
    return x;
  };
  const std::vector<Verdict> verdicts = {v(VerdictKind::NetworkScan, 100), v(VerdictKind::NetworkScan, 200),
                                         v(VerdictKind::SqlDump, 300), v(VerdictKind::SqlDump, 310)};
  const auto ev = evaluate(verdicts, labels);
  EXPECT_EQ(ev.per_kind.at(VerdictKind::NetworkScan).true_positives, 1u);
  EXPECT_EQ(ev.per_kind.at(VerdictKind::NetworkScan).false_positives, 1u);
  EXPECT_DOUBLE_EQ(ev.per_kind.at(VerdictKind::NetworkScan).precision, 0.5);
  // A window starting exactly at the label's end still overlaps it.
  EXPECT_EQ(ev.per_kind.at(VerdictKind::SqlDump).true_positives, 2u);
  EXPECT_DOUBLE_EQ(ev.per_kind.at(VerdictKind::SshBruteForce).recall, 0.0);
  EXPECT_DOUBLE_EQ(ev.per_kind.at(VerdictKind::SshBruteForce).precision, 1.0);
  EXPECT_DOUBLE_EQ(ev.precision, 0.75);
  EXPECT_DOUBLE_EQ(ev.recall, 2.0 / 3.0);
}

TEST(Config, CheckRejectsNonPositive) {
  DetectorConfig c;
  EXPECT_NO_THROW(c.check());
  c.window_s = 0;
  EXPECT_THROW(c.check(), ContractError);
  c = {};
  c.baseline_windows = 0;
  EXPECT_THROW(c.check(), ContractError);
  c = {};
  c.threshold_k = -1;
  EXPECT_THROW(c.check(), ContractError);
  c = {};
  c.min_count = 0;
  EXPECT_THROW(c.check(), ContractError);
}

class ShippedSuite : public ::testing::TestWithParam<std::pair<const char*, VerdictKind>> {};

TEST_P(ShippedSuite, PerfectPrecisionAndRecall) {
  const auto [file, kind] = GetParam();
  const auto t = shipped(file);
  const auto verdicts = detect_all(t, DetectorConfig{});
  ASSERT_FALSE(verdicts.empty());
  const auto ev = evaluate(verdicts, t.labels);
  for (const auto& [k, s] : ev.per_kind) {
    EXPECT_DOUBLE_EQ(s.precision, 1.0) << to_string(k);
    EXPECT_DOUBLE_EQ(s.recall, 1.0) << to_string(k);
  }
  EXPECT_GE(ev.per_kind.at(kind).labels, 1u);
  EXPECT_EQ(ev.per_kind.at(kind).labels_detected, ev.per_kind.at(kind).labels);
}

INSTANTIATE_TEST_SUITE_P(Scenarios, ShippedSuite,
                         ::testing::Values(std::make_pair("scan-only.json", VerdictKind::NetworkScan),
                                           std::make_pair("bruteforce-only.json", VerdictKind::SshBruteForce),
                                           std::make_pair("sqldump-only.json", VerdictKind::SqlDump)));

// Default rates and staff size. Around 15+ employees the benign bursts on a
// single client start clearing min_count=20.
TEST(Background, NoVerdicts) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (auto preset : {Preset::SME, Preset::LargeEnterprise}) {
      const auto doc = default_doc(preset, seed);
      const auto t = run_scenario(doc).trace;
      ASSERT_FALSE(t.packets.empty());
      EXPECT_TRUE(detect_all(t, DetectorConfig{}).empty()) << to_string(preset) << " seed " << seed;
    }
  }
}
