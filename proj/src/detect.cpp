// SPDX-License-Identifier: Apache-2.0

#include "rangesim/detect.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <tuple>

namespace rangesim {

namespace {

struct Tally {
  std::map<Ipv4, Counters> by_dst;
  std::map<Ipv4, Counters> by_src;
  std::map<Ipv4, std::set<Ipv4>> dst_peers;
  std::map<Ipv4, std::set<Ipv4>> src_peers;

  void add(const PacketEvent& e) {
    auto& d = by_dst[e.dst];
    auto& s = by_src[e.src];
    auto bump = [&](Feature f) {
      ++d[f];
      ++s[f];
    };
    if (e.proto == Proto::Tcp && e.flags.is_syn_only()) {
      bump(Feature::ConnRequests);
      dst_peers[e.dst].insert(e.src);
      src_peers[e.src].insert(e.dst);
    }
    if (e.proto == Proto::Tcp && e.flags.has(TcpFlags::RST)) bump(Feature::Rst);
    switch (e.app) {
      case AppKind::DnsQuery: bump(Feature::DnsQueries); break;
      case AppKind::SshDhKex: bump(Feature::DhKex); break;
      case AppKind::HttpGet: bump(Feature::HttpGet); break;
      default: break;
    }
  }

  void finish(FeatureWindow& w) {
    for (const auto& [a, peers] : dst_peers) by_dst[a][Feature::DistinctPeers] = peers.size();
    for (const auto& [a, peers] : src_peers) by_src[a][Feature::DistinctPeers] = peers.size();
    w.by_destination = std::move(by_dst);
    w.by_source = std::move(by_src);
  }
};

std::size_t window_count(const Trace& trace, SimTime width) {
  if (trace.packets.empty()) return 0;
  return static_cast<std::size_t>(trace.packets.back().t.count() / width.count()) + 1;
}

struct Rule {
  VerdictKind kind;
  bool by_source;
  // Disjunction of conjunctions: the verdict fires when every feature of at
  // least one group passes.
  std::vector<std::vector<Feature>> groups;
};

const Rule kScanRule{VerdictKind::NetworkScan, true,
                     {{Feature::ConnRequests, Feature::DistinctPeers}, {Feature::DnsQueries}}};
const Rule kBruteRule{VerdictKind::SshBruteForce, false,
                      {{Feature::ConnRequests, Feature::DhKex, Feature::Rst}}};
const Rule kDumpRule{VerdictKind::SqlDump, false, {{Feature::ConnRequests, Feature::HttpGet}}};

std::vector<Verdict> judge_window(const std::vector<FeatureWindow>& windows, std::size_t i, const Rule& rule,
                                  const DetectorConfig& config) {
  std::vector<Verdict> out;
  const auto& w = windows[i];
  const auto& subjects = rule.by_source ? w.by_source : w.by_destination;
  for (const auto& [subject, counts] : subjects) {
    std::optional<Verdict> best;
    for (const auto& group : rule.groups) {
      Verdict v{rule.kind, w.start, w.end, subject, rule.by_source, 0, {}};
      bool pass = true;
      double score = INFINITY;
      for (auto f : group) {
        const auto fs = score_feature(windows, i, subject, rule.by_source, f, config);
        pass = pass && fs.count >= config.min_count && fs.score >= config.threshold_k;
        score = std::min(score, fs.score);
        v.features.emplace(std::string(to_string(f)), fs);
      }
      if (!pass) continue;
      v.score = score;
      if (!best || v.score > best->score) best = std::move(v);
    }
    if (best) out.push_back(std::move(*best));
  }
  return out;
}

std::vector<Verdict> run_rule(const std::vector<FeatureWindow>& windows, const Rule& rule,
                              const DetectorConfig& config) {
  config.check();
  if (windows.size() <= config.baseline_windows) return {};
  const std::size_t first = config.baseline_windows;
  std::vector<std::vector<Verdict>> per(windows.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::size_t i = first; i < windows.size(); ++i) per[i] = judge_window(windows, i, rule, config);
  std::vector<Verdict> out;
  for (auto& v : per) out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
  return out;
}

std::vector<Verdict> run_rule_serial(const std::vector<FeatureWindow>& windows, const Rule& rule,
                                     const DetectorConfig& config) {
  config.check();
  std::vector<Verdict> out;
  for (std::size_t i = config.baseline_windows; i < windows.size(); ++i) {
    auto v = judge_window(windows, i, rule, config);
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

}  // namespace

std::string_view to_string(Feature f) {
  switch (f) {
    case Feature::ConnRequests: return "tcp_conn_requests";
    case Feature::DistinctPeers: return "distinct_peers";
    case Feature::DnsQueries: return "dns_queries";
    case Feature::DhKex: return "dh_kex_count";
    case Feature::Rst: return "rst_count";
    case Feature::HttpGet: return "http_get_count";
  }
  return "?";
}

std::string_view to_string(VerdictKind v) {
  switch (v) {
    case VerdictKind::NetworkScan: return "NetworkScan";
    case VerdictKind::SshBruteForce: return "SshBruteForce";
    case VerdictKind::SqlDump: return "SqlDump";
  }
  return "?";
}

VerdictKind parse_verdict_kind(std::string_view text) {
  for (auto k : {VerdictKind::NetworkScan, VerdictKind::SshBruteForce, VerdictKind::SqlDump}) {
    if (to_string(k) == text) return k;
  }
  throw ParseError("unknown verdict kind: '" + std::string(text) + "'");
}

std::vector<FeatureWindow> window_features(const Trace& trace, const DetectorConfig& config) {
  config.check();
  const SimTime width = config.width();
  const std::size_t n = window_count(trace, width);
  std::vector<FeatureWindow> windows(n);
  const auto& pk = trace.packets;
#pragma omp parallel for schedule(dynamic, 8)
  for (std::size_t k = 0; k < n; ++k) {
    const SimTime lo = width * static_cast<std::int64_t>(k);
    const SimTime hi = lo + width;
    auto cmp = [](const PacketEvent& e, SimTime t) { return e.t < t; };
    auto b = std::lower_bound(pk.begin(), pk.end(), lo, cmp);
    auto e = std::lower_bound(b, pk.end(), hi, cmp);
    Tally tally;
    for (auto it = b; it != e; ++it) tally.add(*it);
    windows[k].start = lo;
    windows[k].end = hi;
    tally.finish(windows[k]);
  }
  return windows;
}

std::vector<FeatureWindow> window_features_serial(const Trace& trace, const DetectorConfig& config) {
  config.check();
  const SimTime width = config.width();
  const std::size_t n = window_count(trace, width);
  std::vector<Tally> tallies(n);
  for (const auto& e : trace.packets) {
    tallies[static_cast<std::size_t>(e.t.count() / width.count())].add(e);
  }
  std::vector<FeatureWindow> windows(n);
  for (std::size_t k = 0; k < n; ++k) {
    windows[k].start = width * static_cast<std::int64_t>(k);
    windows[k].end = windows[k].start + width;
    tallies[k].finish(windows[k]);
  }
  return windows;
}

FeatureScore score_feature(const std::vector<FeatureWindow>& windows, std::size_t i, Ipv4 subject,
                           bool by_source, Feature f, const DetectorConfig& config) {
  auto value = [&](std::size_t k) -> std::uint64_t {
    const auto& m = by_source ? windows[k].by_source : windows[k].by_destination;
    auto it = m.find(subject);
    return it == m.end() ? 0 : it->second[f];
  };
  FeatureScore fs;
  fs.count = value(i);
  const std::size_t b = std::min(config.baseline_windows, i);
  if (b == 0) return fs;
  double sum = 0;
  for (std::size_t k = i - b; k < i; ++k) sum += static_cast<double>(value(k));
  fs.mean = sum / static_cast<double>(b);
  double sq = 0;
  for (std::size_t k = i - b; k < i; ++k) {
    const double d = static_cast<double>(value(k)) - fs.mean;
    sq += d * d;
  }
  fs.stddev = b > 1 ? std::sqrt(sq / static_cast<double>(b - 1)) : 0.0;
  fs.score = (static_cast<double>(fs.count) - fs.mean) / std::max(fs.stddev, 1.0);
  return fs;
}

std::vector<Verdict> detect_scan(const std::vector<FeatureWindow>& w, const DetectorConfig& c) {
  return run_rule(w, kScanRule, c);
}
std::vector<Verdict> detect_bruteforce(const std::vector<FeatureWindow>& w, const DetectorConfig& c) {
  return run_rule(w, kBruteRule, c);
}
std::vector<Verdict> detect_sqldump(const std::vector<FeatureWindow>& w, const DetectorConfig& c) {
  return run_rule(w, kDumpRule, c);
}
std::vector<Verdict> detect_scan_serial(const std::vector<FeatureWindow>& w, const DetectorConfig& c) {
  return run_rule_serial(w, kScanRule, c);
}
std::vector<Verdict> detect_bruteforce_serial(const std::vector<FeatureWindow>& w, const DetectorConfig& c) {
  return run_rule_serial(w, kBruteRule, c);
}
std::vector<Verdict> detect_sqldump_serial(const std::vector<FeatureWindow>& w, const DetectorConfig& c) {
  return run_rule_serial(w, kDumpRule, c);
}

std::vector<Verdict> detect_all(const Trace& trace, const DetectorConfig& config) {
  const auto windows = window_features(trace, config);
  std::vector<Verdict> out = detect_scan(windows, config);
  for (auto& v : detect_bruteforce(windows, config)) out.push_back(std::move(v));
  for (auto& v : detect_sqldump(windows, config)) out.push_back(std::move(v));
  std::stable_sort(out.begin(), out.end(), [](const Verdict& a, const Verdict& b) {
    return std::tie(a.window_start, a.kind, a.subject) < std::tie(b.window_start, b.kind, b.subject);
  });
  return out;
}

std::vector<ActionKind> matching_actions(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::NetworkScan: return {ActionKind::ScanSubnet};
    case VerdictKind::SshBruteForce: return {ActionKind::SshBruteForce};
    case VerdictKind::SqlDump: return {ActionKind::SqliProbe, ActionKind::SqliDump};
  }
  return {};
}

Evaluation evaluate(const std::vector<Verdict>& verdicts, const std::vector<Label>& labels) {
  auto overlaps = [](const Verdict& v, const Label& l) {
    return v.window_start <= l.end && l.start < v.window_end;
  };
  auto matches = [](VerdictKind k, const Label& l) {
    const auto acts = matching_actions(k);
    return std::find(acts.begin(), acts.end(), l.kind) != acts.end();
  };

  Evaluation ev;
  std::size_t tp = 0, fp = 0, n_labels = 0, detected = 0;
  for (auto kind : {VerdictKind::NetworkScan, VerdictKind::SshBruteForce, VerdictKind::SqlDump}) {
    KindScore ks;
    for (const auto& v : verdicts) {
      if (v.kind != kind) continue;
      const bool hit = std::any_of(labels.begin(), labels.end(),
                                   [&](const Label& l) { return matches(kind, l) && overlaps(v, l); });
      ++(hit ? ks.true_positives : ks.false_positives);
    }
    for (const auto& l : labels) {
      if (!matches(kind, l)) continue;
      ++ks.labels;
      const bool hit = std::any_of(verdicts.begin(), verdicts.end(),
                                   [&](const Verdict& v) { return v.kind == kind && overlaps(v, l); });
      if (hit) ++ks.labels_detected;
    }
    const auto nv = ks.true_positives + ks.false_positives;
    if (nv > 0) ks.precision = static_cast<double>(ks.true_positives) / static_cast<double>(nv);
    if (ks.labels > 0) ks.recall = static_cast<double>(ks.labels_detected) / static_cast<double>(ks.labels);
    tp += ks.true_positives;
    fp += ks.false_positives;
    n_labels += ks.labels;
    detected += ks.labels_detected;
    ev.per_kind[kind] = ks;
  }
  if (tp + fp > 0) ev.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (n_labels > 0) ev.recall = static_cast<double>(detected) / static_cast<double>(n_labels);
  return ev;
}

}  // namespace rangesim
