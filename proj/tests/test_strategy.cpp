// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "support.hpp"

using namespace rangesim;
using namespace rangesim::testing;

namespace {

ScenarioDoc scripted(Preset preset, Profile profile, std::uint64_t seed = 1) {
  auto doc = default_doc(preset, seed);
  doc.attacker.mode = AttackerMode::Script;
  doc.attacker.profile = profile;
  return doc;
}

std::ptrdiff_t index_of(const SessionRecording& r, ActionKind kind) {
  for (std::size_t i = 0; i < r.steps.size(); ++i) {
    if (r.steps[i].action.kind == kind && r.steps[i].outcome.success) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

struct Case {
  Preset preset;
  Profile profile;
};

class Pathways : public ::testing::TestWithParam<Case> {};

}  // namespace

TEST_P(Pathways, ReachGoalAcrossSeeds) {
  const auto [preset, profile] = GetParam();
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto r = run_scenario(scripted(preset, profile, seed));
    EXPECT_TRUE(r.recording.goal_reached) << to_string(profile) << " on " << to_string(preset) << " seed " << seed;
    EXPECT_EQ(r.recording.profile, profile);
    EXPECT_FALSE(r.trace.labels.empty());
  }
}

INSTANTIATE_TEST_SUITE_P(Profiles, Pathways,
                         ::testing::Values(Case{Preset::SME, Profile::PettyThief}, Case{Preset::SME, Profile::Hacktivist},
                                           Case{Preset::LargeEnterprise, Profile::Hacktivist},
                                           Case{Preset::SME, Profile::BlackHat},
                                           Case{Preset::LargeEnterprise, Profile::BlackHat}));

TEST(Pathways, BlackHatDumpsBeforeVpn) {
  for (auto preset : {Preset::SME, Preset::LargeEnterprise}) {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const auto r = run_scenario(scripted(preset, Profile::BlackHat, seed));
      const auto dump = index_of(r.recording, ActionKind::SqliDump);
      const auto vpn = index_of(r.recording, ActionKind::VpnConnect);
      ASSERT_GE(dump, 0);
      ASSERT_GE(vpn, 0);
      EXPECT_LT(dump, vpn);
      // No VPN attempt at all, successful or not, precedes the dump.
      for (std::ptrdiff_t i = 0; i < dump; ++i) {
        EXPECT_NE(r.recording.steps[static_cast<std::size_t>(i)].action.kind, ActionKind::VpnConnect);
      }
    }
  }
}

TEST(Pathways, PettyThiefRejectedOnLarge) {
  EXPECT_THROW(make_strategy(Profile::PettyThief, Preset::LargeEnterprise), ScenarioError);
  EXPECT_THROW(run_scenario(scripted(Preset::LargeEnterprise, Profile::PettyThief)), ScenarioError);
}

TEST(Pathways, Deterministic) {
  const auto doc = scripted(Preset::LargeEnterprise, Profile::BlackHat, 5);
  const auto a = run_scenario(doc);
  const auto b = run_scenario(doc);
  EXPECT_EQ(a.recording, b.recording);
  EXPECT_EQ(a.trace, b.trace);
}

TEST(Pathways, GoalsMatchLoot) {
  const auto petty = run_scenario(scripted(Preset::SME, Profile::PettyThief));
  EXPECT_TRUE(petty.recording.final_state.has_loot(LootKind::EmployeeRecord));
  const auto hack = run_scenario(scripted(Preset::SME, Profile::Hacktivist));
  EXPECT_FALSE(hack.recording.final_state.impacts.empty());
  const auto black = run_scenario(scripted(Preset::LargeEnterprise, Profile::BlackHat));
  const auto& loot = black.recording.final_state.loot;
  EXPECT_TRUE(std::any_of(loot.begin(), loot.end(), [](const LootItem& l) {
    return l.kind == LootKind::File && l.name.find("/classified/") != std::string::npos;
  }));
}

TEST(Pathways, ActionsModeGoalIsAllSucceeded) {
  auto doc = quiet_doc(Preset::SME);
  const auto topo = materialize(doc).topology;
  doc.attacker.mode = AttackerMode::Actions;
  doc.attacker.actions = {AttackAction::scan(Cidr::parse("10.0.2.0/24"), {22})};
  EXPECT_TRUE(run_scenario(doc).recording.goal_reached);
  doc.attacker.actions.push_back(AttackAction::sqli_probe(addr_of(topo, "web"), 80));
  EXPECT_FALSE(run_scenario(doc).recording.goal_reached);
}

TEST(Pathways, InteractiveModeRunsBackgroundOnly) {
  auto doc = default_doc(Preset::SME, 2);
  doc.timing.duration_s = 120;
  const auto r = run_scenario(doc);
  EXPECT_TRUE(r.recording.steps.empty());
  EXPECT_TRUE(r.trace.labels.empty());
  EXPECT_FALSE(r.trace.packets.empty());
  EXPECT_LT(r.trace.packets.back().t, seconds(121));
}

TEST(Describe, ListsStepsAndGoal) {
  const auto text = describe(make_strategy(Profile::BlackHat, Preset::LargeEnterprise));
  EXPECT_NE(text.find("BlackHat on LargeEnterprise"), std::string::npos);
  EXPECT_NE(text.find("SqliDump"), std::string::npos);
  EXPECT_NE(text.find("goal:"), std::string::npos);
  EXPECT_LT(text.find("SqliDump"), text.find("VpnConnect"));
}

TEST(Shape, LargeHasLan2) {
  EXPECT_EQ(shape_of(build_preset(Preset::SME, 1)), Preset::SME);
  EXPECT_EQ(shape_of(build_preset(Preset::LargeEnterprise, 1)), Preset::LargeEnterprise);
}
