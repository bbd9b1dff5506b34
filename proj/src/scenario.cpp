// SPDX-License-Identifier: Apache-2.0

#include "rangesim/scenario.hpp"

#include <algorithm>

namespace rangesim {

Seeds Seeds::from(std::uint64_t seed) { return {seed, seed, seed, seed}; }

std::string_view to_string(AttackerMode v) {
  switch (v) {
    case AttackerMode::Interactive: return "interactive";
    case AttackerMode::Script: return "script";
    case AttackerMode::Actions: return "actions";
  }
  return "?";
}

AttackerMode parse_attacker_mode(std::string_view text) {
  for (auto m : {AttackerMode::Interactive, AttackerMode::Script, AttackerMode::Actions}) {
    if (to_string(m) == text) return m;
  }
  throw ParseError("unknown attacker mode: '" + std::string(text) + "'");
}

const Vulnerability* Scenario::find_vulnerability(std::string_view node, VulnId id) const {
  auto it = std::find_if(vulnerabilities.begin(), vulnerabilities.end(),
                         [&](const Vulnerability& v) { return v.attached_node == node && v.id == id; });
  return it == vulnerabilities.end() ? nullptr : &*it;
}

Scenario materialize(const ScenarioDoc& doc) {
  Scenario sc;
  sc.doc = doc;
  if (doc.preset.has_value() == doc.topology.has_value()) {
    throw ScenarioError("$: exactly one of 'preset' or 'topology' must be given");
  }
  sc.topology = doc.preset ? build_preset(*doc.preset, doc.seeds.topology) : *doc.topology;

  std::size_t weak_rank = 0;
  for (std::size_t i = 0; i < doc.vulnerabilities.size(); ++i) {
    const auto& toggle = doc.vulnerabilities[i];
    const std::string where = "$.vulnerabilities[" + std::to_string(i) + "]";
    auto it = std::find_if(sc.topology.nodes.begin(), sc.topology.nodes.end(),
                           [&](const NodeSpec& n) { return n.id == toggle.node; });
    if (it == sc.topology.nodes.end()) {
      throw ScenarioError(where + ".node: unknown node '" + toggle.node + "'");
    }
    auto& list = it->vulnerabilities;
    list.erase(std::remove(list.begin(), list.end(), toggle.id), list.end());
    if (toggle.enabled) list.push_back(toggle.id);
    if (toggle.weak_rank != 0) {
      if (toggle.id != VulnId::WeakSshPassword) {
        throw ScenarioError(where + ".rank: only WeakSshPassword takes a rank");
      }
      if (toggle.weak_rank > canonical_dictionary().size()) {
        throw ScenarioError(where + ".rank: exceeds dictionary length");
      }
      weak_rank = toggle.weak_rank;
    }
  }

  try {
    validate(sc.topology);
    check_attachments(sc.topology);
  } catch (const ScenarioError& e) {
    throw ScenarioError(std::string("$.topology.") + e.what());
  }

  if (doc.employees == 0) throw ScenarioError("$.employees: must be at least 1");
  const auto& bg = doc.background;
  if (bg.per_employee_rate < 0 || bg.webapp_login < 0 || bg.file_read < 0 || bg.dns_lookup < 0) {
    throw ScenarioError("$.background: rates must be non-negative");
  }
  if (bg.per_employee_rate > 0 && bg.webapp_login + bg.file_read + bg.dns_lookup <= 0) {
    throw ScenarioError("$.background: flow mix must have a positive weight");
  }
  if (bg.ntp_interval_s < 0) throw ScenarioError("$.background.ntp_interval_s: must be >= 0");
  if (doc.timing.duration_s < 0 || doc.timing.attack_start_s < 0 || doc.timing.think_time_ms < 0) {
    throw ScenarioError("$.timing: values must be non-negative");
  }
  try {
    doc.detector.check();
  } catch (const ContractError& e) {
    throw ScenarioError(std::string("$.detector: ") + e.what());
  }
  if (doc.attacker.mode == AttackerMode::Script && doc.attacker.profile == Profile::PettyThief &&
      doc.preset == Preset::LargeEnterprise) {
    throw ScenarioError("$.attacker.profile: PettyThief targets SME networks only");
  }
  for (std::size_t i = 0; i < doc.attacker.actions.size(); ++i) {
    try {
      doc.attacker.actions[i].check();
    } catch (const ContractError& e) {
      throw ScenarioError("$.attacker.actions[" + std::to_string(i) + "]: " + e.what());
    }
  }

  sc.vulnerabilities = attach_vulnerabilities(sc.topology, doc.seeds.credentials, weak_rank);
  sc.store = seed_store(doc.seeds.credentials, doc.employees);
  return sc;
}

ScenarioDoc default_doc(Preset preset, std::uint64_t seed) {
  ScenarioDoc doc;
  doc.name = std::string(to_string(preset)) + "-default";
  doc.preset = preset;
  doc.seeds = Seeds::from(seed);
  return doc;
}

}  // namespace rangesim
