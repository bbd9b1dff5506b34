// SPDX-License-Identifier: Apache-2.0

#include "rangesim/vulnreg.hpp"

#include <array>
#include <cctype>

#include "rangesim/rng.hpp"

namespace rangesim {

namespace {

constexpr std::array<std::string_view, 24> kFirstNames = {
    "Alice", "Bala",  "Chen",  "Diana", "Ethan", "Farah", "Grace",  "Hiro",
    "Irene", "Jamal", "Kavya", "Liam",  "Mei",   "Nikhil", "Olivia", "Priya",
    "Quinn", "Rahul", "Sara",  "Tomas", "Uma",   "Victor", "Wen",    "Yusuf",
};

constexpr std::array<std::string_view, 20> kLastNames = {
    "Tan",   "Lim",    "Ng",    "Wong",  "Kumar", "Lee",   "Goh",   "Chua",  "Ong",   "Koh",
    "Singh", "Rahman", "Teo",   "Ho",    "Yeo",   "Low",   "Sim",   "Chong", "Quek",  "Ang",
};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string random_secret(Rng& rng, std::size_t length) {
  static constexpr std::string_view kAlphabet =
      "abcdefghjkmnpqrstuvwxyzABCDEFGHJKMNPQRSTUVWXYZ23456789";
  std::string out;
  for (std::size_t i = 0; i < length; ++i) out += kAlphabet[rng.below(kAlphabet.size())];
  return out;
}

}  // namespace

NodeRole required_role(VulnId id) {
  switch (id) {
    case VulnId::WeakSshPassword: return NodeRole::WebServer;
    case VulnId::SqlInjection: return NodeRole::AppServer;
    case VulnId::VpnPasswordOnlyAuth: return NodeRole::VpnServer;
    case VulnId::DnsCachePoisonable: return NodeRole::DnsServer;
    case VulnId::SmbRemoteCommandExec: return NodeRole::FileServer;
  }
  return NodeRole::WebServer;
}

CredentialStore seed_store(std::uint64_t seed, std::size_t n_employees) {
  if (n_employees == 0) throw ContractError("credential store needs at least one employee");
  Rng rng(Rng::mix(seed ^ 0x43524544ULL));
  CredentialStore store;
  store.admin_password = random_secret(rng, 16);
  for (std::size_t i = 0; i < n_employees; ++i) {
    EmployeeRecord r;
    r.employee_id = static_cast<int>(i + 1);
    const auto first = kFirstNames[rng.below(kFirstNames.size())];
    const auto last = kLastNames[rng.below(kLastNames.size())];
    r.name = std::string(first) + " " + std::string(last);
    // Ids keep emails and usernames unique even when names repeat.
    const auto handle = lower(first) + "." + lower(last) + std::to_string(r.employee_id);
    r.email = handle + "@corp.example";
    r.phone = "+65 6" + std::to_string(100 + rng.below(900)) + " " +
              std::to_string(1000 + rng.below(9000));
    r.webapp_username = handle;
    r.webapp_password = random_secret(rng, 10);
    r.vpn_username = "vpn-" + handle;
    r.vpn_password = random_secret(rng, 12);
    store.records.push_back(std::move(r));
  }
  return store;
}

std::vector<Vulnerability> attach_vulnerabilities(const Topology& topology, std::uint64_t seed,
                                                  std::size_t weak_rank) {
  const auto dict = canonical_dictionary();
  Rng rng(Rng::mix(seed ^ 0x5745414BULL));
  const std::size_t drawn = 1 + rng.below(kWeakRankMax);
  const std::size_t rank = weak_rank != 0 ? weak_rank : drawn;
  if (rank > dict.size()) {
    throw ScenarioError("weak password rank " + std::to_string(rank) + " exceeds dictionary length");
  }

  std::vector<Vulnerability> out;
  for (const auto& n : topology.nodes) {
    for (auto id : n.vulnerabilities) {
      Vulnerability v{id, n.id, std::monostate{}};
      if (id == VulnId::WeakSshPassword) {
        v.params = WeakSshParams{std::string(kWeakSshUser), std::string(dict[rank - 1]), rank};
      } else if (id == VulnId::SqlInjection) {
        v.params = SqlInjectionParams{std::string(kSqliEndpoint), std::string(kSqliParameter)};
      }
      out.push_back(std::move(v));
    }
  }
  return out;
}

void check_attachments(const Topology& topology) {
  for (const auto& n : topology.nodes) {
    for (auto id : n.vulnerabilities) {
      if (n.role != required_role(id)) {
        throw ScenarioError("nodes[" + n.id + "].vulnerabilities: " + std::string(to_string(id)) +
                            " attaches only to " + std::string(to_string(required_role(id))) +
                            ", not " + std::string(to_string(n.role)));
      }
    }
  }
}

bool is_exploitable(const Topology& topology, std::string_view node, VulnId id) {
  return topology.node(node).has_vulnerability(id);
}

}  // namespace rangesim
