// SPDX-License-Identifier: Apache-2.0
//
// Export and import of traces (pcap, syslog text, JSONL event log) and the
// JSON forms of scenarios, actions, outcomes, attacker state, recordings
// and verdicts. docs/formats.md describes every layout.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "rangesim/attacker.hpp"
#include "rangesim/detect.hpp"
#include "rangesim/engine.hpp"
#include "rangesim/scenario.hpp"

namespace rangesim {

using Json = nlohmann::ordered_json;  // keeps field order as written

/// Syslog timestamps count from this instant (2021-03-01T00:00:00Z).
inline constexpr std::int64_t kSyslogEpoch = 1614556800;

// Packet capture ------------------------------------------------------------

inline constexpr std::size_t kPcapHeaderBytes = 24;
inline constexpr std::size_t kPcapRecordHeaderBytes = 16;

/// Synthesized IPv4 packet (headers plus tagged payload) for one event.
std::string packet_bytes(const PacketEvent& p);
/// Classic pcap, raw IPv4 link type. Checksums are zero.
std::string write_pcap(const Trace& trace);

// Syslog --------------------------------------------------------------------

std::string syslog_line(const SyslogEvent& e);
std::string write_syslog(const Trace& trace);

// Event log -----------------------------------------------------------------

Json to_json(const PacketEvent& p);
Json to_json(const SyslogEvent& e);
Json to_json(const Label& l);
PacketEvent packet_from_json(const Json& j);
SyslogEvent syslog_from_json(const Json& j);
Label label_from_json(const Json& j);

std::string write_events(const Trace& trace);
/// Throws ParseError naming the offending line, or the last good line when
/// the log is truncated.
Trace read_events(std::string_view text);

// Scenario documents ---------------------------------------------------------

Json to_json(const Topology& t);
Topology topology_from_json(const Json& j);
Json to_json(const AttackAction& a);
AttackAction action_from_json(const Json& j);
Json to_json(const ScenarioDoc& doc);
/// Schema check only; throws ScenarioError with a $.path prefix.
ScenarioDoc scenario_from_json(const Json& j);

/// Schema plus topology and attachment invariants (materialize()).
ScenarioDoc parse_scenario(std::string_view text);
std::string serialize_scenario(const ScenarioDoc& doc);

// Attacker state and recordings ---------------------------------------------

Json to_json(const StateDelta& d);
StateDelta delta_from_json(const Json& j);
Json to_json(const ActionOutcome& o);
ActionOutcome outcome_from_json(const Json& j);
Json to_json(const AttackerState& s);
AttackerState state_from_json(const Json& j);

/// Attacker-knowable view: node identities are replaced by addresses.
Json redacted(const AttackerState& s);
/// Outcome with its delta rendered against the post-action state.
Json redacted(const ActionOutcome& o, const AttackerState& after);

Json to_json(const SessionRecording& r);
SessionRecording recording_from_json(const Json& j);

// Verdicts ------------------------------------------------------------------

Json to_json(const Verdict& v);
Verdict verdict_from_json(const Json& j);
/// One JSON object per line.
std::string write_verdicts(const std::vector<Verdict>& verdicts);
std::vector<Verdict> read_verdicts(std::string_view text);
/// Human-readable one-line-per-verdict listing.
std::string format_verdicts(const std::vector<Verdict>& verdicts);

// Export bundles ------------------------------------------------------------

/// File name -> contents: trace.pcap, syslog.log, events.jsonl,
/// recording.json and verdicts.jsonl.
using Bundle = std::map<std::string, std::string>;

Bundle make_bundle(const SessionRecording& recording, const Trace& trace, const DetectorConfig& detector);
/// Writes every file into dir, creating it if needed. Throws Error on I/O
/// failure.
void write_bundle(const std::filesystem::path& dir, const Bundle& bundle);

}  // namespace rangesim
