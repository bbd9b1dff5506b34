// SPDX-License-Identifier: Apache-2.0
//
// Scenario documents and their materialized, validated form.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rangesim/actions.hpp"
#include "rangesim/detect_config.hpp"
#include "rangesim/netmodel.hpp"
#include "rangesim/vulnreg.hpp"

namespace rangesim {

struct Seeds {
  std::uint64_t topology = 1;
  std::uint64_t credentials = 1;
  std::uint64_t engine = 1;
  std::uint64_t attacker = 1;

  /// Derives the four stream seeds from a single user-facing seed.
  static Seeds from(std::uint64_t seed);

  friend bool operator==(const Seeds&, const Seeds&) = default;
};

/// Benign employee activity. Rates are Poisson arrivals per second.
struct BackgroundConfig {
  double per_employee_rate = 0.2;
  double webapp_login = 0.4;
  double file_read = 0.3;
  double dns_lookup = 0.3;
  std::int64_t ntp_interval_s = 64;  // 0 disables NTP syncs

  friend bool operator==(const BackgroundConfig&, const BackgroundConfig&) = default;
};

struct TimingConfig {
  std::int64_t duration_s = 600;
  std::int64_t attack_start_s = 320;
  std::int64_t think_time_ms = 2000;

  friend bool operator==(const TimingConfig&, const TimingConfig&) = default;
};

/// Adds (enabled) or removes (disabled) one attachment on top of the
/// topology's own list.
struct VulnToggle {
  VulnId id = VulnId::WeakSshPassword;
  NodeId node;
  bool enabled = true;
  std::size_t weak_rank = 0;  // WeakSshPassword only; 0 draws from the seed

  friend bool operator==(const VulnToggle&, const VulnToggle&) = default;
};

enum class AttackerMode { Interactive, Script, Actions };

std::string_view to_string(AttackerMode v);
AttackerMode parse_attacker_mode(std::string_view text);

struct AttackerSpec {
  AttackerMode mode = AttackerMode::Interactive;
  Profile profile = Profile::PettyThief;  // Script mode
  std::vector<AttackAction> actions;      // Actions mode

  friend bool operator==(const AttackerSpec&, const AttackerSpec&) = default;
};

struct ScenarioDoc {
  std::string name = "scenario";
  std::optional<Preset> preset = Preset::SME;
  std::optional<Topology> topology;  // used when preset is absent
  Seeds seeds;
  std::size_t employees = 10;
  std::vector<VulnToggle> vulnerabilities;
  BackgroundConfig background;
  TimingConfig timing;
  DetectorConfig detector;
  AttackerSpec attacker;

  friend bool operator==(const ScenarioDoc&, const ScenarioDoc&) = default;
};

/// A validated scenario with its topology, vulnerabilities and credential
/// store resolved.
struct Scenario {
  ScenarioDoc doc;
  Topology topology;
  std::vector<Vulnerability> vulnerabilities;
  CredentialStore store;

  const Vulnerability* find_vulnerability(std::string_view node, VulnId id) const;
};

/// Throws ScenarioError with a field path when the document is invalid.
Scenario materialize(const ScenarioDoc& doc);

/// Convenience: a preset scenario with default settings.
ScenarioDoc default_doc(Preset preset, std::uint64_t seed = 1);

}  // namespace rangesim
