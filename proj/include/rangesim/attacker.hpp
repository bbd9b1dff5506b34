// SPDX-License-Identifier: Apache-2.0
//
// Attacker sessions: state (footholds, knowledge, loot), execution of the
// action vocabulary against an engine, and session recordings.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "rangesim/actions.hpp"
#include "rangesim/engine.hpp"
#include "rangesim/rng.hpp"
#include "rangesim/scenario.hpp"

namespace rangesim {

enum class Privilege { User, Admin, Shell };
enum class Access { Local, Ssh, Smb, ReverseShell };

std::string_view to_string(Privilege v);
std::string_view to_string(Access v);
Privilege parse_privilege(std::string_view text);
Access parse_access(std::string_view text);

struct Foothold {
  NodeId node;
  Ipv4 address;
  Privilege privilege = Privilege::User;
  Access access = Access::Local;
  NodeId via;  // node the access channel originates from
  std::optional<Credential> credential;

  friend bool operator==(const Foothold&, const Foothold&) = default;
};

struct KnownHost {
  Ipv4 address;
  bool live = false;
  std::map<std::uint16_t, std::string> open_ports;  // port -> banner

  friend bool operator==(const KnownHost&, const KnownHost&) = default;
};

enum class LootKind { Credential, EmployeeRecord, File };
std::string_view to_string(LootKind v);
LootKind parse_loot_kind(std::string_view text);

struct LootItem {
  LootKind kind = LootKind::Credential;
  std::string name;
  std::map<std::string, std::string> fields;
  std::size_t provenance = 0;  // index of the producing step in the recording
  ActionKind source = ActionKind::ScanSubnet;

  friend bool operator==(const LootItem&, const LootItem&) = default;
};

struct TunnelInfo {
  NodeId client;
  Ipv4 server;
  Ipv4 address;
  Cidr routes;

  friend bool operator==(const TunnelInfo&, const TunnelInfo&) = default;
};

struct AttackerState {
  NodeId entry;
  NodeId position;
  std::map<NodeId, Foothold> footholds;
  std::map<Ipv4, KnownHost> known_hosts;
  std::set<Cidr> known_subnets;
  std::vector<LootItem> loot;
  std::vector<TunnelInfo> tunnels;
  std::set<std::pair<Ipv4, std::uint16_t>> sqli_confirmed;
  std::vector<std::string> impacts;

  const Foothold* foothold_at(Ipv4 addr) const;
  bool has_loot(LootKind kind) const;

  friend bool operator==(const AttackerState&, const AttackerState&) = default;
};

/// What one action added to the attacker state.
struct StateDelta {
  std::vector<Foothold> footholds;
  std::vector<KnownHost> hosts;
  std::vector<Cidr> subnets;
  std::vector<std::pair<Ipv4, std::uint16_t>> injectable;
  std::vector<LootItem> loot;
  std::optional<TunnelInfo> tunnel;
  std::optional<NodeId> position;
  std::vector<std::string> impacts;

  bool empty() const;
  friend bool operator==(const StateDelta&, const StateDelta&) = default;
};

struct ActionOutcome {
  bool success = false;
  std::string summary;
  StateDelta gained;
  SimTime t_start{0};
  SimTime t_end{0};

  friend bool operator==(const ActionOutcome&, const ActionOutcome&) = default;
};

struct RecordedStep {
  SimTime t{0};  // simulated start time
  AttackAction action;
  ActionOutcome outcome;

  friend bool operator==(const RecordedStep&, const RecordedStep&) = default;
};

struct SessionRecording {
  std::string session_id;
  ScenarioDoc scenario;
  std::optional<Profile> profile;
  std::vector<RecordedStep> steps;
  AttackerState final_state;
  bool goal_reached = false;

  friend bool operator==(const SessionRecording&, const SessionRecording&) = default;
};

inline constexpr std::size_t kSqliProbeRequests = 40;
inline constexpr std::size_t kPoisonBurst = 30;
inline constexpr double kLateralSuccessRate = 0.7;
inline constexpr int kLateralAttempts = 3;
inline constexpr std::uint16_t kReverseShellPort = 4444;
inline constexpr SimTime kScanProbeSpacing{200};
inline constexpr SimTime kChunkSpacing{100};

/// Splits a transfer into chunk sizes; a tail shorter than 40 bytes is
/// merged into the previous chunk.
std::vector<std::uint32_t> chunk_sizes(std::uint64_t bytes);

/// One attacker playing against one engine. Actions are executed strictly
/// in call order; each starts no earlier than the current clock.
class AttackSession {
 public:
  explicit AttackSession(Scenario scenario, std::string id = "session");

  Engine& engine() { return engine_; }
  const Engine& engine() const { return engine_; }
  const AttackerState& state() const { return state_; }
  const std::vector<RecordedStep>& steps() const { return steps_; }
  const std::string& id() const { return id_; }

  /// Executes at max(at, now). Throws ContractError for actions the
  /// attacker may not issue (dump before probe, unlooted credential,
  /// malformed parameters); nothing is recorded then.
  ActionOutcome execute(const AttackAction& action, std::optional<SimTime> at = std::nullopt);

  /// Moves the clock forward, generating background traffic.
  void idle_until(SimTime t) { engine_.advance_to(t); }

  /// Captured trace with one label per recorded step that left at least one
  /// captured packet or syslog event.
  Trace trace() const;
  SessionRecording recording(std::optional<Profile> profile = std::nullopt,
                             bool goal_reached = false) const;

 private:
  ActionOutcome scan(const ScanParams& p, SimTime at);
  ActionOutcome brute_force(const BruteForceParams& p, SimTime at);
  ActionOutcome sqli_probe(const SqliParams& p, SimTime at);
  ActionOutcome sqli_dump(const SqliParams& p, SimTime at);
  ActionOutcome vpn_connect(const VpnConnectParams& p, SimTime at);
  ActionOutcome dns_poison(const DnsPoisonParams& p, SimTime at);
  ActionOutcome reverse_shell(const TargetParams& p, SimTime at);
  ActionOutcome exfiltrate(const TargetParams& p, SimTime at);
  ActionOutcome impact(ActionKind kind, Ipv4 target, std::optional<ServiceKind> service, SimTime at);
  ActionOutcome lateral_move(const LateralMoveParams& p, SimTime at);
  ActionOutcome privilege_escalate(const TargetParams& p, SimTime at);
  ActionOutcome send_phish(const PhishParams& p, SimTime at);

  /// Runs a command over a foothold's access channel; returns the end time,
  /// or nullopt when the channel could not be opened.
  std::optional<SimTime> remote_exec(const Foothold& f, const std::string& command, SimTime at);
  Ipv4 address_for(const NodeId& from, const NodeSpec& node, std::uint16_t port) const;
  Foothold make_foothold(const NodeSpec& node, Privilege p, Access a, const NodeId& via) const;
  void learn_routes(const NodeSpec& node, StateDelta& delta) const;
  void apply(const StateDelta& delta, ActionKind source);

  std::string id_;
  Engine engine_;
  Rng rng_;
  AttackerState state_;
  std::vector<RecordedStep> steps_;
  std::vector<Label> labels_;
};

/// Re-executes a recording's actions at their recorded times on a fresh
/// session of the same scenario.
std::vector<ActionOutcome> replay(const SessionRecording& recording);

}  // namespace rangesim
