// SPDX-License-Identifier: Apache-2.0
//
// Windowed traffic features and the three spike detectors (network scan,
// SSH brute force, database dump).
//
// Each kernel has an OpenMP version (the default) and a *_serial reference
// used by the tests and the benchmark; both return identical results.

#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rangesim/detect_config.hpp"
#include "rangesim/engine.hpp"

namespace rangesim {

enum class Feature : std::uint8_t {
  ConnRequests,  // SYN-only packets
  DistinctPeers, // distinct addresses on the other side of those SYNs
  DnsQueries,
  DhKex,
  Rst,
  HttpGet,
};
inline constexpr std::size_t kFeatureCount = 6;
std::string_view to_string(Feature f);

struct Counters {
  std::array<std::uint64_t, kFeatureCount> v{};

  std::uint64_t operator[](Feature f) const { return v[static_cast<std::size_t>(f)]; }
  std::uint64_t& operator[](Feature f) { return v[static_cast<std::size_t>(f)]; }
  friend bool operator==(const Counters&, const Counters&) = default;
};

struct FeatureWindow {
  SimTime start{0};
  SimTime end{0};
  std::map<Ipv4, Counters> by_destination;  // peers = distinct sources
  std::map<Ipv4, Counters> by_source;       // peers = distinct destinations

  friend bool operator==(const FeatureWindow&, const FeatureWindow&) = default;
};

/// Tumbling windows [k*w, (k+1)*w) from t=0 through the last packet,
/// empty ones included. An empty trace yields no windows.
std::vector<FeatureWindow> window_features(const Trace& trace, const DetectorConfig& config);
std::vector<FeatureWindow> window_features_serial(const Trace& trace, const DetectorConfig& config);

enum class VerdictKind { NetworkScan, SshBruteForce, SqlDump };
std::string_view to_string(VerdictKind v);
VerdictKind parse_verdict_kind(std::string_view text);

struct FeatureScore {
  std::uint64_t count = 0;
  double mean = 0;
  double stddev = 0;
  double score = 0;
  friend bool operator==(const FeatureScore&, const FeatureScore&) = default;
};

struct Verdict {
  VerdictKind kind = VerdictKind::NetworkScan;
  SimTime window_start{0};
  SimTime window_end{0};
  Ipv4 subject;
  bool subject_is_source = true;
  double score = 0;
  std::map<std::string, FeatureScore> features;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

/// Score of one subject's feature in window i against the preceding
/// baseline_windows windows: (count - mean) / max(sample std, 1).
FeatureScore score_feature(const std::vector<FeatureWindow>& windows, std::size_t i, Ipv4 subject,
                           bool by_source, Feature f, const DetectorConfig& config);

std::vector<Verdict> detect_scan(const std::vector<FeatureWindow>& windows, const DetectorConfig& config);
std::vector<Verdict> detect_bruteforce(const std::vector<FeatureWindow>& windows, const DetectorConfig& config);
std::vector<Verdict> detect_sqldump(const std::vector<FeatureWindow>& windows, const DetectorConfig& config);
std::vector<Verdict> detect_scan_serial(const std::vector<FeatureWindow>& windows, const DetectorConfig& config);
std::vector<Verdict> detect_bruteforce_serial(const std::vector<FeatureWindow>& windows,
                                              const DetectorConfig& config);
std::vector<Verdict> detect_sqldump_serial(const std::vector<FeatureWindow>& windows,
                                           const DetectorConfig& config);

/// All three detectors, ordered by (window, kind, subject).
std::vector<Verdict> detect_all(const Trace& trace, const DetectorConfig& config);

struct KindScore {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t labels = 0;
  std::size_t labels_detected = 0;
  double precision = 1.0;  // vacuously 1 without verdicts
  double recall = 1.0;     // vacuously 1 without labels

  friend bool operator==(const KindScore&, const KindScore&) = default;
};

struct Evaluation {
  std::map<VerdictKind, KindScore> per_kind;
  double precision = 1.0;
  double recall = 1.0;
};

/// Action kinds a verdict kind is meant to catch.
std::vector<ActionKind> matching_actions(VerdictKind kind);

/// A verdict is a true positive iff its window overlaps a label of a
/// matching kind; a label counts as detected iff such a verdict exists.
Evaluation evaluate(const std::vector<Verdict>& verdicts, const std::vector<Label>& labels);

}  // namespace rangesim
