// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for the test suites and the acceptance runner.

#pragma once

#include <algorithm>
#include <array>
#include <set>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "rangesim/attacker.hpp"
#include "rangesim/detect.hpp"
#include "rangesim/scenario.hpp"
#include "rangesim/strategy.hpp"
#include "rangesim/traceio.hpp"

namespace rangesim::testing {

inline std::string scenario_path(const std::string& name) {
  return std::string(RANGESIM_SCENARIO_DIR) + "/" + name;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Preset scenario without background traffic, so every event comes from
/// the attacker.
inline ScenarioDoc quiet_doc(Preset preset, std::uint64_t seed = 1) {
  ScenarioDoc doc = default_doc(preset, seed);
  doc.background.per_employee_rate = 0;
  doc.background.ntp_interval_s = 0;
  return doc;
}

inline Ipv4 addr_of(const Topology& t, std::string_view id) { return t.node(id).primary_address(); }

inline Ipv4 addr_of(const AttackSession& s, std::string_view id) { return addr_of(s.engine().topology(), id); }

/// Emitted packets with seq >= from.
inline std::vector<PacketEvent> since(const Engine& e, std::uint64_t from) {
  std::vector<PacketEvent> out;
  for (const auto& p : e.emitted()) {
    if (p.seq >= from) out.push_back(p);
  }
  return out;
}

template <class Pred>
std::size_t count_if(const std::vector<PacketEvent>& v, Pred pred) {
  return static_cast<std::size_t>(std::count_if(v.begin(), v.end(), pred));
}

/// Random packet trace with sorted timestamps and arbitrary field values.
inline Trace random_trace(std::uint64_t seed, std::size_t n, SimTime span) {
  Rng rng(seed);
  Trace t;
  std::vector<std::int64_t> times(n);
  for (auto& x : times) x = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(span.count())));
  std::sort(times.begin(), times.end());
  for (std::size_t i = 0; i < n; ++i) {
    PacketEvent p;
    p.seq = i + 1;
    p.t = SimTime(times[i]);
    p.conn = rng.below(4) == 0 ? 0 : rng.below(50) + 1;
    p.src = Ipv4(10, 0, static_cast<std::uint8_t>(rng.below(3)), static_cast<std::uint8_t>(rng.below(12) + 1));
    p.dst = Ipv4(10, 0, static_cast<std::uint8_t>(rng.below(3)), static_cast<std::uint8_t>(rng.below(12) + 1));
    p.src_port = static_cast<std::uint16_t>(rng.below(65536));
    p.dst_port = static_cast<std::uint16_t>(rng.below(65536));
    p.proto = rng.below(5) == 0 ? Proto::Udp : Proto::Tcp;
    if (p.proto == Proto::Tcp) {
      // Bias towards bare SYNs so ConnRequests is exercised.
      p.flags.bits = rng.below(3) == 0 ? TcpFlags::SYN : static_cast<std::uint8_t>(rng.below(32));
    }
    p.app = static_cast<AppKind>(rng.below(14));
    p.size = static_cast<std::uint32_t>(rng.below(1500) + 20);
    if (rng.below(2) == 0) p.meta["k" + std::to_string(rng.below(3))] = "v" + std::to_string(rng.below(100));
    t.packets.push_back(std::move(p));
  }
  return t;
}

/// random_trace plus syslog lines (with escapes and UTF-8) and labels.
inline Trace full_random_trace(std::uint64_t seed) {
  auto t = random_trace(seed, 200, seconds(1000));
  Rng rng(seed ^ 0xABCDEF);
  for (int i = 0; i < 30; ++i) {
    SyslogEvent e;
    e.seq = 1000 + static_cast<std::uint64_t>(i);
    e.received = SimTime(static_cast<std::int64_t>(rng.below(1'000'000'000)));
    e.t = e.received + ms(static_cast<std::int64_t>(rng.below(3000)) - 1500);
    e.host = "host" + std::to_string(rng.below(5));
    e.facility = static_cast<int>(rng.below(24));
    e.severity = static_cast<int>(rng.below(8));
    e.tag = "tag" + std::to_string(rng.below(9));
    e.message = "msg \"quoted\" \\ tab\t unicode \xC3\xA9 " + std::to_string(rng.next());
    t.syslog.push_back(e);
  }
  for (int i = 0; i < 5; ++i) {
    const auto s = SimTime(static_cast<std::int64_t>(rng.below(1'000'000'000)));
    t.labels.push_back({s, s + seconds(static_cast<std::int64_t>(rng.below(60))),
                        static_cast<ActionKind>(rng.below(14)), "node" + std::to_string(i)});
  }
  return t;
}

inline constexpr std::array<Feature, kFeatureCount> kAllFeatures = {
    Feature::ConnRequests, Feature::DistinctPeers, Feature::DnsQueries,
    Feature::DhKex,        Feature::Rst,           Feature::HttpGet};

/// Naive recount: scans the whole trace once per window, subject and feature.
inline std::uint64_t recount_feature(const Trace& t, SimTime lo, SimTime hi, Ipv4 subject, bool by_source,
                                     Feature f) {
  std::set<Ipv4> peers;
  std::uint64_t n = 0;
  for (const auto& p : t.packets) {
    if (p.t < lo || p.t >= hi) continue;
    if ((by_source ? p.src : p.dst) != subject) continue;
    const bool syn = p.proto == Proto::Tcp && p.flags.bits == TcpFlags::SYN;
    switch (f) {
      case Feature::ConnRequests: n += syn; break;
      case Feature::DistinctPeers:
        if (syn) peers.insert(by_source ? p.dst : p.src);
        break;
      case Feature::DnsQueries: n += p.app == AppKind::DnsQuery; break;
      case Feature::DhKex: n += p.app == AppKind::SshDhKex; break;
      case Feature::Rst: n += p.proto == Proto::Tcp && (p.flags.bits & TcpFlags::RST) != 0; break;
      case Feature::HttpGet: n += p.app == AppKind::HttpGet; break;
    }
  }
  return f == Feature::DistinctPeers ? peers.size() : n;
}

/// Number of (window, subject, side, feature) cells that disagree with the
/// recount, stopping at the first mismatch.
inline std::size_t recount_mismatches(const Trace& t, const std::vector<FeatureWindow>& windows,
                                      const DetectorConfig& c) {
  const auto w = c.width();
  const std::size_t expected = t.packets.empty() ? 0 : static_cast<std::size_t>(t.packets.back().t / w) + 1;
  if (windows.size() != expected) return 1;
  std::set<Ipv4> addrs;
  for (const auto& p : t.packets) {
    addrs.insert(p.src);
    addrs.insert(p.dst);
  }
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto lo = w * static_cast<std::int64_t>(k);
    if (windows[k].start != lo || windows[k].end != lo + w) return 1;
    for (auto a : addrs) {
      for (bool by_source : {true, false}) {
        const auto& m = by_source ? windows[k].by_source : windows[k].by_destination;
        auto it = m.find(a);
        for (auto f : kAllFeatures) {
          const std::uint64_t got = it == m.end() ? 0 : it->second[f];
          if (got != recount_feature(t, lo, lo + w, a, by_source, f)) return 1;
        }
      }
    }
  }
  return 0;
}

}  // namespace rangesim::testing
