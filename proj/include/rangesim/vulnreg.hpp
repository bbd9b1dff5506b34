// SPDX-License-Identifier: Apache-2.0
//
// Vulnerability registry and the synthetic employee credential store.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "rangesim/netmodel.hpp"

namespace rangesim {

struct WeakSshParams {
  std::string username;
  std::string password;
  std::size_t rank = 1;  // 1-based position in the canonical dictionary

  friend bool operator==(const WeakSshParams&, const WeakSshParams&) = default;
};

struct SqlInjectionParams {
  std::string endpoint_path;
  std::string parameter;

  friend bool operator==(const SqlInjectionParams&, const SqlInjectionParams&) = default;
};

struct Vulnerability {
  VulnId id = VulnId::WeakSshPassword;
  NodeId attached_node;
  std::variant<std::monostate, WeakSshParams, SqlInjectionParams> params;

  friend bool operator==(const Vulnerability&, const Vulnerability&) = default;
};

struct EmployeeRecord {
  int employee_id = 0;
  std::string name;
  std::string email;
  std::string phone;
  std::string webapp_username;
  std::string webapp_password;
  std::string vpn_username;
  std::string vpn_password;

  friend bool operator==(const EmployeeRecord&, const EmployeeRecord&) = default;
};

struct CredentialStore {
  std::vector<EmployeeRecord> records;
  /// Password of the administrator account present on every node.
  std::string admin_password;

  friend bool operator==(const CredentialStore&, const CredentialStore&) = default;
};

inline constexpr std::string_view kAdminUser = "admin";
inline constexpr std::string_view kWeakSshUser = "webmaster";
inline constexpr std::string_view kSqliEndpoint = "/employee.php";
inline constexpr std::string_view kSqliParameter = "id";
inline constexpr std::size_t kWeakRankMax = 200;

/// The shipped ordered list of 1000 common passwords.
std::span<const std::string_view> canonical_dictionary();

/// Role a vulnerability may be attached to.
NodeRole required_role(VulnId id);

/// Deterministic in (seed, n_employees). Throws ContractError when n == 0.
CredentialStore seed_store(std::uint64_t seed, std::size_t n_employees);

/// Parameters for every attachment listed on the topology's nodes. The weak
/// SSH password rank is drawn uniformly from [1, 200] unless `weak_rank`
/// overrides it.
std::vector<Vulnerability> attach_vulnerabilities(const Topology& topology, std::uint64_t seed,
                                                  std::size_t weak_rank = 0);

/// Throws ScenarioError when a vulnerability sits on a node of the wrong role.
void check_attachments(const Topology& topology);

/// True iff the vulnerability is attached to the node. Unknown node throws.
bool is_exploitable(const Topology& topology, std::string_view node, VulnId id);

}  // namespace rangesim
