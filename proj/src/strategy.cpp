// SPDX-License-Identifier: Apache-2.0

#include "rangesim/strategy.hpp"

#include <algorithm>
#include <sstream>

namespace rangesim {

namespace {

using Plan = std::function<std::optional<AttackAction>(const AttackerState&, int)>;

Ipv4 position_address(const AttackerState& s) { return s.footholds.at(s.position).address; }

bool has_hosts_in(const AttackerState& s, const Cidr& cidr) {
  return std::any_of(s.known_hosts.begin(), s.known_hosts.end(),
                     [&](const auto& kv) { return cidr.contains(kv.first); });
}

std::optional<Cidr> own_subnet(const AttackerState& s) {
  for (const auto& c : s.known_subnets) {
    if (c.contains(position_address(s))) return c;
  }
  return std::nullopt;
}

std::vector<Ipv4> hosts_with(const AttackerState& s, std::uint16_t port, std::string_view banner = {}) {
  std::vector<Ipv4> out;
  for (const auto& [addr, h] : s.known_hosts) {
    auto it = h.open_ports.find(port);
    if (it != h.open_ports.end() && it->second.find(banner) != std::string::npos) out.push_back(addr);
  }
  return out;
}

std::optional<Ipv4> first_with(const AttackerState& s, std::uint16_t port) {
  auto hosts = hosts_with(s, port);
  if (hosts.empty()) return std::nullopt;
  return hosts.front();
}

const LootItem* first_employee(const AttackerState& s) {
  for (const auto& l : s.loot) {
    if (l.kind == LootKind::EmployeeRecord && l.fields.contains("vpn_username")) return &l;
  }
  return nullptr;
}

StrategyStep scan_own() {
  return {"scan the local subnet", ActionKind::ScanSubnet, "position's own subnet not yet scanned",
          [](const AttackerState& s, int) -> std::optional<AttackAction> {
            auto c = own_subnet(s);
            if (!c || has_hosts_in(s, *c)) return std::nullopt;
            return AttackAction::scan(*c);
          }};
}

StrategyStep scan_new_subnet() {
  return {"scan a newly reachable subnet", ActionKind::ScanSubnet,
          "a known subnet other than the tunnel's holds no known hosts",
          [](const AttackerState& s, int) -> std::optional<AttackAction> {
            for (const auto& c : s.known_subnets) {
              const bool tunnel = std::any_of(s.tunnels.begin(), s.tunnels.end(),
                                              [&](const TunnelInfo& t) { return t.routes == c; });
              if (!tunnel && !has_hosts_in(s, c) && !c.contains(position_address(s))) {
                return AttackAction::scan(c);
              }
            }
            return std::nullopt;
          }};
}

StrategyStep lateral_to_workstation() {
  return {"move onto a Windows workstation", ActionKind::LateralMove,
          "a host with a Windows SMB banner is known and not yet held",
          [](const AttackerState& s, int attempt) -> std::optional<AttackAction> {
            std::vector<Ipv4> targets;
            for (auto a : hosts_with(s, 445, "Windows")) {
              if (s.foothold_at(a) == nullptr) targets.push_back(a);
            }
            if (targets.empty()) return std::nullopt;
            // Earlier attempts that failed leave their target unheld; rotate.
            return AttackAction::lateral_move(targets[static_cast<std::size_t>(attempt) % targets.size()]);
          },
          4};
}

StrategyStep escalate_here() {
  return {"escalate privileges on the workstation", ActionKind::PrivilegeEscalate,
          "current position held with User privilege",
          [](const AttackerState& s, int) -> std::optional<AttackAction> {
            const auto& f = s.footholds.at(s.position);
            if (s.position == s.entry || f.privilege != Privilege::User) return std::nullopt;
            return AttackAction::targeted(ActionKind::PrivilegeEscalate, f.address);
          }};
}

StrategyStep sqli_probe() {
  return {"probe the employee portal for SQL injection", ActionKind::SqliProbe,
          "a host with port 8080 open is known",
          [](const AttackerState& s, int) -> std::optional<AttackAction> {
            auto app = first_with(s, 8080);
            if (!app) return std::nullopt;
            return AttackAction::sqli_probe(*app);
          }};
}

StrategyStep sqli_dump() {
  return {"dump the employee database", ActionKind::SqliDump, "injection confirmed",
          [](const AttackerState& s, int) -> std::optional<AttackAction> {
            if (s.sqli_confirmed.empty()) return std::nullopt;
            const auto& [addr, port] = *s.sqli_confirmed.begin();
            return AttackAction::sqli_dump(addr, port);
          }};
}

Plan unless_impact(Plan plan) {
  return [plan](const AttackerState& s, int attempt) -> std::optional<AttackAction> {
    if (!s.impacts.empty()) return std::nullopt;
    return plan(s, attempt);
  };
}

}  // namespace

Preset shape_of(const Topology& topology) {
  return topology.find_subnet(SubnetLabel::LAN2) != nullptr ? Preset::LargeEnterprise : Preset::SME;
}

StrategyScript make_strategy(Profile profile, Preset preset) {
  StrategyScript script;
  script.profile = profile;
  script.preset = preset;
  const bool large = preset == Preset::LargeEnterprise;
  auto& steps = script.steps;

  switch (profile) {
    case Profile::PettyThief:
      if (large) throw ScenarioError("$.attacker.profile: PettyThief targets SME networks only");
      steps = {scan_own(), sqli_probe(), sqli_dump()};
      script.goal = "employee e-mail and phone records in loot";
      script.goal_met = [](const AttackerState& s) {
        return std::any_of(s.loot.begin(), s.loot.end(), [](const LootItem& l) {
          return l.kind == LootKind::EmployeeRecord && l.fields.contains("email") && l.fields.contains("phone");
        });
      };
      break;

    case Profile::Hacktivist:
      steps.push_back(scan_own());
      if (large) {
        steps.push_back(lateral_to_workstation());
        steps.push_back(escalate_here());
        steps.push_back(scan_new_subnet());
      }
      steps.push_back({"brute-force SSH on the web server", ActionKind::SshBruteForce,
                       "a host with port 80 and port 22 open is known",
                       [](const AttackerState& s, int) -> std::optional<AttackAction> {
                         for (auto a : hosts_with(s, 80)) {
                           if (s.known_hosts.at(a).open_ports.contains(22)) {
                             return AttackAction::brute_force(a, std::string(kWeakSshUser));
                           }
                         }
                         return std::nullopt;
                       }});
      steps.push_back({"deface the website", ActionKind::DefaceWebsite,
                       "admin foothold on a host serving port 80",
                       [](const AttackerState& s, int) -> std::optional<AttackAction> {
                         for (auto a : hosts_with(s, 80)) {
                           const auto* f = s.foothold_at(a);
                           if (f && f->privilege >= Privilege::Admin) {
                             return AttackAction::targeted(ActionKind::DefaceWebsite, a);
                           }
                         }
                         return std::nullopt;
                       }});
      steps.push_back({"otherwise disable the web server", ActionKind::DisableService,
                       "defacement did not land and an admin foothold on the web server exists",
                       unless_impact([](const AttackerState& s, int) -> std::optional<AttackAction> {
                         for (auto a : hosts_with(s, 80)) {
                           const auto* f = s.foothold_at(a);
                           if (f && f->privilege >= Privilege::Admin) {
                             return AttackAction::disable_service(a, ServiceKind::Http);
                           }
                         }
                         return std::nullopt;
                       })});
      script.goal = "website defaced or disabled";
      script.goal_met = [](const AttackerState& s) { return !s.impacts.empty(); };
      break;

    case Profile::BlackHat:
      steps.push_back(scan_own());
      if (large) {
        steps.push_back(lateral_to_workstation());
        steps.push_back(escalate_here());
        steps.push_back(scan_new_subnet());
      }
      steps.push_back(sqli_probe());
      steps.push_back(sqli_dump());
      steps.push_back({"connect to the VPN with a stolen credential", ActionKind::VpnConnect,
                       "a host with port 1194 open is known and VPN credentials are looted",
                       [](const AttackerState& s, int) -> std::optional<AttackAction> {
                         auto gw = first_with(s, 1194);
                         const auto* e = first_employee(s);
                         if (!gw || e == nullptr || !s.tunnels.empty()) return std::nullopt;
                         return AttackAction::vpn_connect(*gw, e->fields.at("vpn_username"),
                                                          e->fields.at("vpn_password"));
                       }});
      steps.push_back({"scan the remote-site subnet through the tunnel", ActionKind::ScanSubnet,
                       "a tunnel is up and its subnet holds no known hosts",
                       [](const AttackerState& s, int) -> std::optional<AttackAction> {
                         for (const auto& t : s.tunnels) {
                           if (!has_hosts_in(s, t.routes)) {
                             return AttackAction::scan(t.routes);
                           }
                         }
                         return std::nullopt;
                       }});
      steps.push_back({"exfiltrate files from the remote-site host", ActionKind::ExfiltrateFiles,
                       "a file-sharing host inside the tunnel's subnet is known",
                       [](const AttackerState& s, int) -> std::optional<AttackAction> {
                         for (const auto& t : s.tunnels) {
                           for (auto a : hosts_with(s, 445)) {
                             if (t.routes.contains(a)) return AttackAction::targeted(ActionKind::ExfiltrateFiles, a);
                           }
                         }
                         return std::nullopt;
                       }});
      steps.push_back({"send a phishing e-mail to an employee", ActionKind::SendPhish,
                       "an employee e-mail address is looted",
                       [](const AttackerState& s, int) -> std::optional<AttackAction> {
                         const auto* e = first_employee(s);
                         if (e == nullptr || !e->fields.contains("email")) return std::nullopt;
                         return AttackAction::send_phish("it-support@" + std::string(kCorpDomain),
                                                         e->fields.at("email"));
                       }});
      script.goal = "classified files from the remote-site host in loot";
      script.goal_met = [](const AttackerState& s) {
        return std::any_of(s.loot.begin(), s.loot.end(), [](const LootItem& l) {
          return l.kind == LootKind::File && l.name.find("/classified/") != std::string::npos;
        });
      };
      break;
  }
  return script;
}

bool run_strategy(AttackSession& session, const StrategyScript& script, SimTime start, SimTime think) {
  SimTime t = std::max(start, session.engine().now());
  for (const auto& step : script.steps) {
    for (int attempt = 0; attempt < step.max_attempts; ++attempt) {
      auto action = step.plan(session.state(), attempt);
      if (!action) break;
      const auto out = session.execute(*action, t);
      t = out.t_end + think;
      if (out.success) break;
    }
  }
  return script.goal_met(session.state());
}

std::string describe(const StrategyScript& script) {
  std::ostringstream os;
  os << to_string(script.profile) << " on " << to_string(script.preset) << "\n";
  for (std::size_t i = 0; i < script.steps.size(); ++i) {
    const auto& s = script.steps[i];
    os << "  " << (i + 1) << ". " << to_string(s.kind) << ": " << s.name << "\n"
       << "     guard: " << s.guard << "\n";
    if (s.max_attempts > 1) os << "     retries: up to " << s.max_attempts << " attempts\n";
  }
  os << "  goal: " << script.goal << "\n";
  return os.str();
}

RunResult run_scenario(const ScenarioDoc& doc) {
  Scenario scenario = materialize(doc);
  const Preset shape = doc.preset.value_or(shape_of(scenario.topology));
  AttackSession session(std::move(scenario), doc.name);
  const SimTime start = seconds(doc.timing.attack_start_s);
  const SimTime think = ms(doc.timing.think_time_ms);

  std::optional<Profile> profile;
  bool goal = false;
  switch (doc.attacker.mode) {
    case AttackerMode::Script: {
      profile = doc.attacker.profile;
      goal = run_strategy(session, make_strategy(*profile, shape), start, think);
      break;
    }
    case AttackerMode::Actions: {
      SimTime t = start;
      for (const auto& a : doc.attacker.actions) t = session.execute(a, t).t_end + think;
      goal = !session.steps().empty() &&
             std::all_of(session.steps().begin(), session.steps().end(),
                         [](const RecordedStep& s) { return s.outcome.success; });
      break;
    }
    case AttackerMode::Interactive:
      break;
  }
  session.idle_until(seconds(doc.timing.duration_s));
  return {session.recording(profile, goal), session.trace()};
}

}  // namespace rangesim
