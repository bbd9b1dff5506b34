// SPDX-License-Identifier: Apache-2.0
//
// Per-profile attack pathways as guarded step lists, and the batch runner
// that plays a scenario from start to finish.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rangesim/attacker.hpp"

namespace rangesim {

struct StrategyStep {
  std::string name;
  ActionKind kind = ActionKind::ScanSubnet;
  std::string guard;  // human-readable form of the guard
  /// Builds the action for the given attempt from attacker knowledge only;
  /// nullopt means the guard does not hold (the step is skipped).
  std::function<std::optional<AttackAction>(const AttackerState&, int attempt)> plan;
  int max_attempts = 1;
};

struct StrategyScript {
  Profile profile = Profile::PettyThief;
  Preset preset = Preset::SME;
  std::vector<StrategyStep> steps;
  std::string goal;
  std::function<bool(const AttackerState&)> goal_met;
};

/// Throws ScenarioError for PettyThief on a LargeEnterprise network.
StrategyScript make_strategy(Profile profile, Preset preset);

/// The preset a topology resembles: LargeEnterprise when it has a LAN2.
Preset shape_of(const Topology& topology);

/// Runs the script from `start`, leaving `think` between actions. Steps are
/// retried up to their attempt bound until they succeed.
bool run_strategy(AttackSession& session, const StrategyScript& script, SimTime start, SimTime think);

/// Numbered pathway listing: step, guard, action kind, retry bound, goal.
std::string describe(const StrategyScript& script);

struct RunResult {
  SessionRecording recording;
  Trace trace;
};

/// Materializes the document, plays its attacker (script, action list or
/// nobody) and runs background traffic to the configured duration.
RunResult run_scenario(const ScenarioDoc& doc);

}  // namespace rangesim
