// SPDX-License-Identifier: Apache-2.0

#include "rangesim/engine.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <regex>

namespace rangesim {

namespace {

constexpr std::array kApps = {
    AppKind::None,        AppKind::DnsQuery,      AppKind::DnsResponse,  AppKind::HttpGet,
    AppKind::HttpResponse, AppKind::SshBanner,    AppKind::SshDhKex,     AppKind::SshAuthAttempt,
    AppKind::SshAuthResult, AppKind::TlsHandshake, AppKind::VpnData,     AppKind::SmbCommand,
    AppKind::SyslogMsg,   AppKind::NtpSync,
};

constexpr std::array<std::string_view, 8> kEmployeeColumns = {
    "id", "name", "email", "phone", "webapp_username", "webapp_password", "vpn_username",
    "vpn_password",
};

constexpr std::uint16_t kNtpPort = 123;
constexpr std::uint16_t kSyslogPort = 514;
constexpr std::uint16_t kDnsPort = 53;

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

/// Answer of the public resolver: NXDOMAIN for private space and the
/// company zone, a stable made-up address otherwise.
std::optional<std::string> public_answer(const std::string& name, bool ptr) {
  if (ptr || ends_with(name, kCorpDomain)) return std::nullopt;
  std::uint32_t h = 2166136261u;
  for (char c : name) h = (h ^ static_cast<unsigned char>(c)) * 16777619u;
  return Ipv4(93, 184, static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(1 + h % 250)).str();
}

std::optional<Ipv4> parse_reverse_name(const std::string& name) {
  static const std::regex re(R"((\d+)\.(\d+)\.(\d+)\.(\d+)\.in-addr\.arpa)");
  std::smatch m;
  if (!std::regex_match(name, m, re)) return std::nullopt;
  try {
    return Ipv4::parse(m[4].str() + "." + m[3].str() + "." + m[2].str() + "." + m[1].str());
  } catch (const ParseError&) {
    return std::nullopt;
  }
}

std::string query_string(const Meta& params) {
  std::string out;
  for (const auto& [k, v] : params) {
    if (!out.empty()) out += '&';
    const bool secret = k == "pass" || k == "password";
    out += k + "=" + (secret ? std::string("***") : v);
  }
  return out;
}

}  // namespace

std::string_view to_string(Proto v) { return v == Proto::Tcp ? "TCP" : "UDP"; }

std::string_view to_string(AppKind v) {
  switch (v) {
    case AppKind::None: return "None";
    case AppKind::DnsQuery: return "DnsQuery";
    case AppKind::DnsResponse: return "DnsResponse";
    case AppKind::HttpGet: return "HttpGet";
    case AppKind::HttpResponse: return "HttpResponse";
    case AppKind::SshBanner: return "SshBanner";
    case AppKind::SshDhKex: return "SshDhKex";
    case AppKind::SshAuthAttempt: return "SshAuthAttempt";
    case AppKind::SshAuthResult: return "SshAuthResult";
    case AppKind::TlsHandshake: return "TlsHandshake";
    case AppKind::VpnData: return "VpnData";
    case AppKind::SmbCommand: return "SmbCommand";
    case AppKind::SyslogMsg: return "SyslogMsg";
    case AppKind::NtpSync: return "NtpSync";
  }
  return "?";
}

Proto parse_proto(std::string_view text) {
  if (text == "TCP") return Proto::Tcp;
  if (text == "UDP") return Proto::Udp;
  throw ParseError("unknown protocol: '" + std::string(text) + "'");
}

AppKind parse_app_kind(std::string_view text) {
  for (auto a : kApps) {
    if (to_string(a) == text) return a;
  }
  throw ParseError("unknown app kind: '" + std::string(text) + "'");
}

std::string_view to_string(ConnOutcome v) {
  switch (v) {
    case ConnOutcome::Open: return "Open";
    case ConnOutcome::Refused: return "Refused";
    case ConnOutcome::Filtered: return "Filtered";
  }
  return "?";
}

std::vector<std::string_view> TcpFlags::names() const {
  std::vector<std::string_view> out;
  if (has(SYN)) out.push_back("SYN");
  if (has(ACK)) out.push_back("ACK");
  if (has(RST)) out.push_back("RST");
  if (has(FIN)) out.push_back("FIN");
  if (has(PSH)) out.push_back("PSH");
  return out;
}

TcpFlags TcpFlags::from_names(const std::vector<std::string>& names) {
  TcpFlags f;
  for (const auto& n : names) {
    if (n == "SYN") f.bits |= SYN;
    else if (n == "ACK") f.bits |= ACK;
    else if (n == "RST") f.bits |= RST;
    else if (n == "FIN") f.bits |= FIN;
    else if (n == "PSH") f.bits |= PSH;
    else throw ParseError("unknown TCP flag: '" + n + "'");
  }
  return f;
}

std::vector<FileEntry> file_manifest(NodeRole role) {
  switch (role) {
    case NodeRole::VpnHost:
      return {{"/srv/classified/product_source.tar.gz", 1048576},
              {"/srv/classified/roadmap_2021.pdf", 262144},
              {"/srv/classified/design_specs.docx", 131072}};
    case NodeRole::FileServer:
      return {{"/srv/share/hr/salaries.xlsx", 65536},
              {"/srv/share/finance/q1_report.pdf", 131072}};
    case NodeRole::Workstation:
      return {{"C:/Users/employee/Documents/notes.docx", 32768}};
    default:
      return {};
  }
}

std::span<const std::string_view> employee_columns() { return kEmployeeColumns; }

std::string employee_field(const EmployeeRecord& r, std::string_view column) {
  if (column == "id") return std::to_string(r.employee_id);
  if (column == "name") return r.name;
  if (column == "email") return r.email;
  if (column == "phone") return r.phone;
  if (column == "webapp_username") return r.webapp_username;
  if (column == "webapp_password") return r.webapp_password;
  if (column == "vpn_username") return r.vpn_username;
  if (column == "vpn_password") return r.vpn_password;
  throw ContractError("unknown employee column '" + std::string(column) + "'");
}

Engine::Engine(Scenario scenario)
    : scenario_(std::move(scenario)),
      database_(scenario_.store),
      action_rng_(Rng::mix(scenario_.doc.seeds.engine ^ 0x41435421ULL)),
      flow_rng_(Rng::mix(scenario_.doc.seeds.engine ^ 0x464C4F57ULL)),
      ntp_rng_(Rng::mix(scenario_.doc.seeds.engine ^ 0x4E545021ULL)) {
  const auto& bg = scenario_.doc.background;
  for (const auto& n : topology().nodes) {
    if (n.role == NodeRole::Workstation || n.role == NodeRole::VpnClient) {
      employee_hosts_.push_back(static_cast<std::size_t>(&n - topology().nodes.data()));
    }
  }
  const double rate = bg.per_employee_rate * static_cast<double>(database_.records.size());
  flows_enabled_ = rate > 0 && !employee_hosts_.empty() &&
                   bg.webapp_login + bg.file_read + bg.dns_lookup > 0;
  if (flows_enabled_) {
    next_flow_ = SimTime(1 + std::llround(flow_rng_.exponential(rate) * 1e6));
  }
  if (bg.ntp_interval_s > 0 && topology().first_with_role(NodeRole::LoggingServer)) {
    const auto interval = static_cast<std::uint64_t>(seconds(bg.ntp_interval_s).count());
    for (std::size_t i = 0; i < topology().nodes.size(); ++i) {
      if (topology().nodes[i].role == NodeRole::LoggingServer) continue;
      ntp_next_.emplace_back(SimTime(static_cast<std::int64_t>(ntp_rng_.below(interval))), i);
    }
  }
}

Rng& Engine::rng(Stream s) {
  switch (s) {
    case Stream::Flow: return flow_rng_;
    case Stream::Ntp: return ntp_rng_;
    default: return action_rng_;
  }
}

SimTime Engine::latency(Stream s) {
  return kLinkLatency + SimTime(static_cast<std::int64_t>(rng(s).below(1000)));
}

std::uint16_t Engine::ephemeral_port(const NodeId& node, Stream s) {
  // Disjoint ranges keep attacker ports independent of background load.
  const bool bg = s != Stream::Action;
  const std::uint16_t lo = bg ? 49152 : 32768;
  const std::uint16_t hi = bg ? 65535 : 49151;
  auto [it, fresh] = ports_.try_emplace({node, bg ? Stream::Flow : Stream::Action},
                                        static_cast<std::uint16_t>(bg ? 50000 : 40000));
  const std::uint16_t port = it->second;
  it->second = port == hi ? lo : static_cast<std::uint16_t>(port + 1);
  return port;
}

void Engine::emit(PacketEvent ev) {
  ev.seq = next_seq_++;
  emitted_.push_back(std::move(ev));
  for (const auto& fn : packet_observers_) fn(emitted_.back());
}

void Engine::emit_on(Connection& conn, Direction dir, TcpFlags flags, AppKind app,
                     std::uint32_t size, Meta meta, SimTime at) {
  conn.t = std::max(at, conn.t);
  PacketEvent ev;
  ev.t = conn.t;
  ev.conn = conn.id;
  ev.proto = Proto::Tcp;
  ev.flags = flags;
  ev.app = app;
  ev.size = size;
  ev.meta = std::move(meta);
  const bool out = dir == Direction::ToServer;
  ev.src = out ? conn.client : conn.server;
  ev.src_port = out ? conn.client_port : conn.server_port;
  ev.dst = out ? conn.server : conn.client;
  ev.dst_port = out ? conn.server_port : conn.client_port;
  emit(std::move(ev));

  if (conn.tunneled) mirror(conn.client_node, dir, size, conn.t);
}

void Engine::mirror(const NodeId& client, Direction dir, std::uint32_t size, SimTime t) {
  auto& carrier = tunnels_.at(client).carrier;
  carrier.t = std::max(carrier.t, t);
  const bool out = dir == Direction::ToServer;
  PacketEvent outer;
  outer.t = t;
  outer.conn = carrier.id;
  outer.flags.bits = TcpFlags::PSH | TcpFlags::ACK;
  outer.app = AppKind::VpnData;
  outer.size = size + packet_size::kTunnelOverhead;
  outer.src = out ? carrier.client : carrier.server;
  outer.src_port = out ? carrier.client_port : carrier.server_port;
  outer.dst = out ? carrier.server : carrier.client;
  outer.dst_port = out ? carrier.server_port : carrier.client_port;
  emit(std::move(outer));
}

Ipv4 Engine::source_address(const NodeId& node_id, Ipv4 dst) const {
  const auto& node = topology().node(node_id);
  const auto label = topology().label_of(dst);
  if (auto a = node.address_in(label)) return *a;
  if (label == SubnetLabel::VPN) {
    if (auto t = tunnel_address(node_id)) return *t;
  }
  for (const auto& a : node.addresses) {
    if (a.subnet != SubnetLabel::VPN) return a.addr;
  }
  return node.primary_address();
}

Reachability Engine::route(const NodeId& src, Ipv4 dst, std::uint16_t port) const {
  return reachable(topology(), src, dst, port, tunnels_.contains(src));
}

bool Engine::service_up(const NodeSpec& node, std::uint16_t port, SimTime at) const {
  if (listeners_.contains({node.id, port})) return true;
  const auto* svc = node.service_on(port);
  if (svc == nullptr || !svc->enabled) return false;
  auto it = disabled_since_.find({node.id, port});
  return it == disabled_since_.end() || at < it->second;
}

void Engine::disable_service(const NodeId& node, std::uint16_t port, SimTime at) {
  auto [it, fresh] = disabled_since_.try_emplace({node, port}, at);
  if (!fresh) it->second = std::min(it->second, at);
}

int Engine::content_version(const NodeId& node) const {
  auto it = content_version_.find(node);
  return it == content_version_.end() ? 0 : it->second;
}

void Engine::bump_content(const NodeId& node) { ++content_version_[node]; }

void Engine::change_database(SimTime) {
  ++db_version_;
  if (!database_.records.empty()) {
    database_.records.front().phone = "+65 6000 000" + std::to_string(db_version_ % 10);
  }
}

void Engine::open_listener(const NodeId& node, std::uint16_t port) { listeners_.insert({node, port}); }

void Engine::poison_dns(const std::string& name, Ipv4 addr, SimTime from) {
  dns_cache_[name] = Poison{addr, from, from + kPoisonTtl};
}

std::optional<Ipv4> Engine::cached_poison(const std::string& name, SimTime at) const {
  auto it = dns_cache_.find(name);
  if (it == dns_cache_.end() || at < it->second.from || at >= it->second.until) return std::nullopt;
  return it->second.addr;
}

Ipv4 Engine::open_tunnel(const NodeId& client, const Connection& vpn_conn) {
  if (auto existing = tunnel_address(client)) return *existing;
  const auto* vpn = topology().find_subnet(SubnetLabel::VPN);
  if (vpn == nullptr) throw ContractError("topology has no VPN subnet");
  for (std::uint32_t octet = 200; octet <= 254; ++octet) {
    const Ipv4 candidate(vpn->cidr.network().value() | octet);
    const bool used =
        topology().node_at(candidate) != nullptr ||
        std::any_of(tunnels_.begin(), tunnels_.end(),
                    [&](const auto& kv) { return kv.second.address == candidate; });
    if (!used) {
      tunnels_[client] = Tunnel{candidate, vpn_conn};
      return candidate;
    }
  }
  throw ContractError("VPN address pool exhausted");
}

std::optional<Ipv4> Engine::tunnel_address(const NodeId& client) const {
  auto it = tunnels_.find(client);
  if (it == tunnels_.end()) return std::nullopt;
  return it->second.address;
}

std::string Engine::banner(const NodeSpec& node, const ServiceSpec& service) const {
  switch (service.kind) {
    case ServiceKind::Ssh: return "SSH-2.0-OpenSSH_7.2p2 Ubuntu-4ubuntu2.8";
    case ServiceKind::Http: return "Apache/2.4.18 (Ubuntu) company website";
    case ServiceKind::WebApp: return "Apache/2.4.41 (Ubuntu) PHP/7.4 employee portal";
    case ServiceKind::Dns: return "BIND 9.16.1";
    case ServiceKind::Smb:
      return node.role == NodeRole::Workstation ? "Windows 10 Pro 19041 microsoft-ds"
                                                : "Samba smbd 4.3.11";
    case ServiceKind::VpnGateway: return "OpenVPN 2.4.7";
    case ServiceKind::SyslogSink: return "rsyslogd 8.16.0";
    case ServiceKind::Ntp: return "ntpd 4.2.8";
  }
  return "";
}

std::optional<Ipv4> Engine::resolve_internal(const std::string& name) const {
  const std::string suffix = "." + std::string(kCorpDomain);
  if (!ends_with(name, suffix)) return std::nullopt;
  const std::string host = name.substr(0, name.size() - suffix.size());
  static const std::map<std::string, NodeRole, std::less<>> aliases = {
      {"www", NodeRole::WebServer},  {"app", NodeRole::AppServer},
      {"ns", NodeRole::DnsServer},   {"files", NodeRole::FileServer},
      {"vpn", NodeRole::VpnServer},  {"logs", NodeRole::LoggingServer},
  };
  const NodeSpec* node = nullptr;
  if (auto it = aliases.find(host); it != aliases.end()) node = topology().first_with_role(it->second);
  if (node == nullptr) node = topology().find_node(host);
  if (node == nullptr || node->role == NodeRole::VpnHost) return std::nullopt;
  for (const auto& a : node->addresses) {
    if (a.subnet != SubnetLabel::VPN) return a.addr;
  }
  return std::nullopt;
}

Connection Engine::connect_impl(const NodeId& client, Ipv4 dst, std::uint16_t port, SimTime at,
                                Stream stream) {
  const auto& cn = topology().node(client);
  Connection c;
  c.id = next_conn_++;
  c.client_node = client;
  c.server = dst;
  c.server_port = port;
  c.stream = stream;
  c.tunneled = topology().label_of(dst) == SubnetLabel::VPN &&
               !cn.address_in(SubnetLabel::VPN) && tunnels_.contains(client);
  c.client = source_address(client, dst);
  c.client_port = ephemeral_port(client, stream);
  c.t = at;

  emit_on(c, Direction::ToServer, TcpFlags{TcpFlags::SYN}, AppKind::None, packet_size::kSyn, {}, at);
  const auto* server = topology().node_at(dst);
  if (route(client, dst, port) != Reachability::Allowed || server == nullptr) {
    c.outcome = ConnOutcome::Filtered;
    c.t = at + kFilteredTimeout;
    return c;
  }
  if (service_up(*server, port, at)) {
    c.outcome = ConnOutcome::Open;
    emit_on(c, Direction::ToClient, TcpFlags{TcpFlags::SYN | TcpFlags::ACK}, AppKind::None,
            packet_size::kSynAck, {}, c.t + latency(stream));
    emit_on(c, Direction::ToServer, TcpFlags{TcpFlags::ACK}, AppKind::None, packet_size::kAck, {},
            c.t + latency(stream));
  } else {
    c.outcome = ConnOutcome::Refused;
    emit_on(c, Direction::ToClient, TcpFlags{TcpFlags::RST | TcpFlags::ACK}, AppKind::None,
            packet_size::kRst, {}, c.t + latency(stream));
  }
  return c;
}

Connection Engine::tcp_connect(const NodeId& client, Ipv4 dst, std::uint16_t port, SimTime at,
                               Stream stream) {
  return connect_impl(client, dst, port, at, stream);
}

Connection Engine::tcp_probe(const NodeId& client, Ipv4 dst, std::uint16_t port, SimTime at) {
  auto c = connect_impl(client, dst, port, at, Stream::Action);
  if (c.outcome == ConnOutcome::Open) close(c, Direction::ToServer, true, c.t);
  return c;
}

SimTime Engine::send(Connection& conn, Direction dir, AppKind app, std::uint32_t size, Meta meta,
                     SimTime at) {
  emit_on(conn, dir, TcpFlags{TcpFlags::PSH | TcpFlags::ACK}, app, size, std::move(meta), at);
  return conn.t;
}

SimTime Engine::close(Connection& conn, Direction dir, bool reset, SimTime at) {
  if (reset) {
    emit_on(conn, dir, TcpFlags{TcpFlags::RST}, AppKind::None, packet_size::kRst, {}, at);
  } else {
    emit_on(conn, dir, TcpFlags{TcpFlags::FIN | TcpFlags::ACK}, AppKind::None, packet_size::kFin,
            {}, at);
  }
  return conn.t;
}

Engine::Datagram Engine::datagram(const NodeId& src, Ipv4 dst, std::uint16_t port, AppKind app,
                                  std::uint32_t size, Meta meta, SimTime at, Stream stream) {
  const auto& node = topology().node(src);
  Datagram d;
  d.src = source_address(src, dst);
  d.src_port = stream == Stream::Ntp ? kNtpPort : ephemeral_port(src, stream);
  d.tunneled = topology().label_of(dst) == SubnetLabel::VPN &&
               !node.address_in(SubnetLabel::VPN) && tunnels_.contains(src);
  raw_udp(d.src, d.src_port, dst, port, app, size, std::move(meta), at);
  if (d.tunneled) mirror(src, Direction::ToServer, size, at);
  if (route(src, dst, port) == Reachability::Allowed) d.arrival = at + latency(stream);
  return d;
}

std::optional<SimTime> Engine::udp(const NodeId& src, Ipv4 dst, std::uint16_t port, AppKind app,
                                   std::uint32_t size, Meta meta, SimTime at, Stream stream) {
  return datagram(src, dst, port, app, size, std::move(meta), at, stream).arrival;
}

SimTime Engine::raw_udp(Ipv4 src, std::uint16_t src_port, Ipv4 dst, std::uint16_t dst_port,
                        AppKind app, std::uint32_t size, Meta meta, SimTime at) {
  PacketEvent ev;
  ev.t = at;
  ev.proto = Proto::Udp;
  ev.src = src;
  ev.src_port = src_port;
  ev.dst = dst;
  ev.dst_port = dst_port;
  ev.app = app;
  ev.size = size;
  ev.meta = std::move(meta);
  emit(std::move(ev));
  return at;
}

DnsResult Engine::dns_query(const NodeId& src, Ipv4 resolver, const std::string& name, bool ptr,
                            SimTime at, Stream stream) {
  DnsResult r;
  r.end = at;
  const auto query = datagram(src, resolver, kDnsPort, AppKind::DnsQuery, packet_size::kDnsQuery,
                              {{"dns_name", name}, {"qtype", ptr ? "PTR" : "A"}}, at, stream);
  const auto& arrival = query.arrival;
  if (!arrival) return r;

  bool respond = false;
  std::optional<std::string> answer;
  SimTime ready = *arrival;
  if (resolver == kPublicResolver) {
    respond = true;
    answer = public_answer(name, ptr);
  } else if (const auto* server = topology().node_at(resolver);
             server != nullptr && server->service(ServiceKind::Dns) != nullptr &&
             service_up(*server, kDnsPort, *arrival)) {
    respond = true;
    if (ptr) {
      if (auto addr = parse_reverse_name(name)) {
        if (const auto* n = topology().node_at(*addr); n && n->role != NodeRole::VpnHost) {
          answer = n->id + "." + std::string(kCorpDomain);
        }
      }
    } else if (auto poisoned = cached_poison(name, *arrival)) {
      answer = poisoned->str();
    } else if (auto internal = resolve_internal(name)) {
      answer = internal->str();
    } else if (!ends_with(name, kCorpDomain)) {
      // Recursive lookup upstream; fails when the server has no egress.
      if (auto upstream = udp(server->id, kPublicResolver, kDnsPort, AppKind::DnsQuery,
                              packet_size::kDnsQuery, {{"dns_name", name}, {"qtype", "A"}},
                              *arrival, stream)) {
        const auto back = *upstream + latency(stream);
        raw_udp(kPublicResolver, kDnsPort, source_address(server->id, kPublicResolver),
                ephemeral_port(server->id, stream), AppKind::DnsResponse,
                packet_size::kDnsResponse, {{"dns_name", name}}, back);
        answer = public_answer(name, false);
        ready = back;
      }
    }
  }
  if (!respond) return r;

  const SimTime t = ready + latency(stream);
  raw_udp(resolver, kDnsPort, query.src, query.src_port, AppKind::DnsResponse,
          packet_size::kDnsResponse, {{"dns_name", name}, {"answer", answer.value_or("NXDOMAIN")}}, t);
  if (query.tunneled) mirror(src, Direction::ToClient, packet_size::kDnsResponse, t);
  r.responded = true;
  r.answer = answer;
  r.end = t;
  return r;
}

SshResult Engine::ssh_connection(const NodeId& src, Ipv4 dst, std::span<const Credential> attempts,
                                 SimTime at, Stream stream) {
  if (attempts.empty() || attempts.size() > kMaxSshAttempts) {
    throw ContractError("an SSH connection carries 1 to 6 authentication attempts, got " +
                        std::to_string(attempts.size()));
  }
  SshResult r;
  r.conn = connect_impl(src, dst, 22, at, stream);
  r.end = r.conn.t;
  if (r.conn.outcome != ConnOutcome::Open) return r;

  const auto& server = *topology().node_at(dst);
  const auto* weak = scenario_.find_vulnerability(server.id, VulnId::WeakSshPassword);
  const auto* weak_params =
      server.has_vulnerability(VulnId::WeakSshPassword) && weak ? std::get_if<WeakSshParams>(&weak->params) : nullptr;
  auto accepted = [&](const Credential& c) {
    if (c.username == kAdminUser && c.password == scenario_.store.admin_password) return true;
    return weak_params != nullptr && c.username == weak_params->username &&
           c.password == weak_params->password;
  };

  auto& conn = r.conn;
  const auto* ssh = server.service(ServiceKind::Ssh);
  SimTime t = send(conn, Direction::ToClient, AppKind::SshBanner, packet_size::kSshBanner,
                   {{"banner", ssh ? banner(server, *ssh) : ""}}, conn.t + latency(stream));
  t = send(conn, Direction::ToServer, AppKind::SshDhKex, packet_size::kSshDhKex, {}, t + latency(stream));
  const std::string from = " from " + conn.client.str() + " port " + std::to_string(conn.client_port) + " ssh2";
  for (const auto& cred : attempts) {
    t = send(conn, Direction::ToServer, AppKind::SshAuthAttempt, packet_size::kSshAuthAttempt, {},
             t + latency(stream));
    const bool ok = accepted(cred);
    t = send(conn, Direction::ToClient, AppKind::SshAuthResult, packet_size::kSshAuthResult,
             {{"auth_ok", ok ? "true" : "false"}}, t + latency(stream));
    ++r.attempts_made;
    if (ok) {
      syslog(server.id, facility::kAuth, 6, "sshd", "Accepted password for " + cred.username + from, t);
      r.success = true;
      break;
    }
    syslog(server.id, facility::kAuth, 5, "sshd", "Failed password for " + cred.username + from, t);
  }
  if (!r.success) t = close(conn, Direction::ToServer, true, t);
  r.end = t;
  return r;
}

HttpResult Engine::http_get(const NodeId& src, Ipv4 dst, std::uint16_t port, const std::string& path,
                            const Meta& params, SimTime at, Stream stream) {
  HttpResult r;
  r.conn = connect_impl(src, dst, port, at, stream);
  r.end = r.conn.t;
  if (r.conn.outcome != ConnOutcome::Open) {
    r.summary = r.conn.outcome == ConnOutcome::Refused ? "connection refused" : "connection timed out";
    return r;
  }
  auto& conn = r.conn;
  const auto& server = *topology().node_at(dst);
  const auto* svc = server.service_on(port);
  if (svc == nullptr || (svc->kind != ServiceKind::Http && svc->kind != ServiceKind::WebApp)) {
    r.end = close(conn, Direction::ToServer, true, conn.t);
    r.summary = "not an HTTP service";
    return r;
  }

  Meta get_meta{{"http_path", path}};
  if (!params.empty()) get_meta["query"] = query_string(params);
  SimTime t = send(conn, Direction::ToServer, AppKind::HttpGet, packet_size::kHttpGet,
                   std::move(get_meta), conn.t);

  r.status = 200;
  if (svc->kind == ServiceKind::Http) {
    r.summary = "company website v" + std::to_string(content_version(server.id));
  } else if (path == "/login.php") {
    const auto user = params.find("user");
    const auto pass = params.find("pass");
    const bool ok = user != params.end() && pass != params.end() &&
                    std::any_of(database_.records.begin(), database_.records.end(), [&](const auto& e) {
                      return e.webapp_username == user->second && e.webapp_password == pass->second;
                    });
    r.status = ok ? 200 : 401;
    r.rows = ok ? 1 : 0;
    r.summary = ok ? "login ok" : "login failed";
  } else if (path == kSqliEndpoint) {
    const auto* vuln = scenario_.find_vulnerability(server.id, VulnId::SqlInjection);
    const auto* sqli = server.has_vulnerability(VulnId::SqlInjection) && vuln
                           ? std::get_if<SqlInjectionParams>(&vuln->params)
                           : nullptr;
    const auto id_param = params.find(std::string(kSqliParameter));
    const std::string value = id_param == params.end() ? "" : id_param->second;
    if (all_digits(value)) {
      const int id = std::stoi(value);
      r.rows = static_cast<std::size_t>(std::count_if(
          database_.records.begin(), database_.records.end(),
          [&](const auto& e) { return e.employee_id == id; }));
      r.summary = std::to_string(r.rows) + (r.rows == 1 ? " row" : " rows");
    } else if (sqli == nullptr || sqli->endpoint_path != path || id_param == params.end()) {
      r.summary = "0 rows";
    } else {
      static const std::regex row_re(R"(UNION SELECT (\w+) FROM employees LIMIT (\d+),1)");
      std::smatch m;
      if (value.find("information_schema.columns") != std::string::npos) {
        std::string cols;
        for (auto c : employee_columns()) cols += (cols.empty() ? "" : ",") + std::string(c);
        r.field = cols;
      } else if (value.find("information_schema.tables") != std::string::npos) {
        r.field = "employees";
      } else if (value.find("COUNT(*)") != std::string::npos) {
        r.field = std::to_string(database_.records.size());
      } else if (std::regex_search(value, m, row_re)) {
        const auto k = std::stoul(m[2].str());
        const auto columns = employee_columns();
        if (k < database_.records.size() &&
            std::find(columns.begin(), columns.end(), m[1].str()) != columns.end()) {
          r.field = employee_field(database_.records[k], m[1].str());
        }
      } else if (value.find("@@version") != std::string::npos) {
        r.field = "5.7.33-0ubuntu0.16.04.1";
      } else if (value.find("database()") != std::string::npos) {
        r.field = "corpdb";
      } else {
        r.status = 500;
        r.summary = "You have an error in your SQL syntax";
      }
      if (r.field) {
        r.rows = 1;
        r.summary = "1 row";
      }
    }
  } else {
    r.summary = "employee portal";
  }

  t = send(conn, Direction::ToClient, AppKind::HttpResponse, packet_size::kHttpResponse,
           {{"status", std::to_string(r.status)}, {"rows", std::to_string(r.rows)}},
           t + latency(stream));
  r.end = t;
  return r;
}

void Engine::syslog(const NodeId& host, int fac, int severity, std::string tag, std::string message,
                    SimTime at) {
  const auto& node = topology().node(host);
  SyslogEvent ev;
  ev.seq = next_seq_++;
  ev.received = at;
  ev.t = at + ms(node.clock_offset_ms);
  ev.host = host;
  ev.facility = fac;
  ev.severity = severity;
  ev.tag = std::move(tag);
  ev.message = std::move(message);

  const auto* logger = topology().first_with_role(NodeRole::LoggingServer);
  if (logger != nullptr && logger->id != host) {
    // VPN-only nodes reach the collector through the VPN server's LAN side.
    const NodeSpec* relay = &node;
    if (!std::any_of(node.addresses.begin(), node.addresses.end(),
                     [](const NodeAddress& a) { return a.subnet != SubnetLabel::VPN; })) {
      relay = topology().first_with_role(NodeRole::VpnServer);
    }
    if (relay != nullptr) {
      const auto dst = logger->primary_address();
      const auto size = static_cast<std::uint32_t>(
          28 + std::min<std::size_t>(ev.tag.size() + ev.message.size() + 24, 1024));
      raw_udp(source_address(relay->id, dst), kSyslogPort, dst, kSyslogPort, AppKind::SyslogMsg,
              size, {{"host", host}, {"tag", ev.tag}}, at);
    }
  }
  syslog_.push_back(std::move(ev));
  for (const auto& fn : syslog_observers_) fn(syslog_.back());
}

void Engine::advance_to(SimTime t) {
  if (t <= now_) return;
  generate_background(t);
  now_ = t;
}

void Engine::generate_background(SimTime until) {
  if (until <= bg_horizon_) return;
  const auto& bg = scenario_.doc.background;
  const double rate = bg.per_employee_rate * static_cast<double>(database_.records.size());
  const SimTime interval = seconds(bg.ntp_interval_s);
  // Merge both sources in time order so emission order does not depend on
  // how the clock was advanced. Flows win ties.
  while (true) {
    const SimTime flow_at = flows_enabled_ ? next_flow_ : SimTime::max();
    auto ntp = std::min_element(ntp_next_.begin(), ntp_next_.end());
    const SimTime ntp_at = ntp == ntp_next_.end() ? SimTime::max() : ntp->first;
    if (std::min(flow_at, ntp_at) >= until) break;
    if (flow_at <= ntp_at) {
      background_flow(flow_at);
      next_flow_ += SimTime(std::max<std::int64_t>(1, std::llround(flow_rng_.exponential(rate) * 1e6)));
    } else {
      ntp_sync(topology().nodes[ntp->second], ntp_at);
      ntp->first += interval;
    }
  }
  bg_horizon_ = until;
}

void Engine::background_flow(SimTime at) {
  const auto& bg = scenario_.doc.background;
  const double total = bg.webapp_login + bg.file_read + bg.dns_lookup;
  const double pick = flow_rng_.unit() * total;
  const auto& employee = database_.records[flow_rng_.below(database_.records.size())];
  const NodeSpec& host = topology().nodes[employee_hosts_[flow_rng_.below(employee_hosts_.size())]];

  if (pick < bg.webapp_login) {
    if (const auto* app = topology().first_with_role(NodeRole::AppServer)) {
      const auto* svc = app->service(ServiceKind::WebApp);
      http_get(host.id, app->primary_address(), svc ? svc->port : default_port(ServiceKind::WebApp),
               "/login.php", {{"user", employee.webapp_username}, {"pass", employee.webapp_password}},
               at, Stream::Flow);
    }
  } else if (pick < bg.webapp_login + bg.file_read) {
    if (const auto* files = topology().first_with_role(NodeRole::FileServer)) {
      auto conn = tcp_connect(host.id, files->primary_address(), 445, at, Stream::Flow);
      if (conn.outcome == ConnOutcome::Open) {
        auto t = send(conn, Direction::ToServer, AppKind::SmbCommand, packet_size::kSmbCommand,
                      {{"smb", "read"}}, conn.t);
        t = send(conn, Direction::ToClient, AppKind::SmbCommand, 4096, {{"smb", "data"}},
                 t + latency(Stream::Flow));
        close(conn, Direction::ToServer, false, t + latency(Stream::Flow));
      }
    }
  } else if (const auto* dns = topology().first_with_role(NodeRole::DnsServer)) {
    static constexpr std::array<std::string_view, 4> kNames = {"www", "app", "files", "vpn"};
    const std::string name =
        std::string(kNames[flow_rng_.below(kNames.size())]) + "." + std::string(kCorpDomain);
    dns_query(host.id, dns->primary_address(), name, false, at, Stream::Flow);
  }
}

void Engine::ntp_sync(const NodeSpec& node, SimTime at) {
  const auto* server = topology().first_with_role(NodeRole::LoggingServer);
  if (node.role == NodeRole::VpnHost) {
    // The VPN host takes its time from the VPN server's broadcast.
    const auto* vpn = topology().find_subnet(SubnetLabel::VPN);
    const auto* gw = topology().first_with_role(NodeRole::VpnServer);
    if (vpn != nullptr && gw != nullptr) {
      if (auto src = gw->address_in(SubnetLabel::VPN)) {
        raw_udp(*src, kNtpPort, vpn->cidr.broadcast(), kNtpPort, AppKind::NtpSync, packet_size::kNtp,
                {}, at);
      }
    }
    return;
  }
  const auto dst = server->primary_address();
  if (auto arrival = udp(node.id, dst, kNtpPort, AppKind::NtpSync, packet_size::kNtp, {}, at, Stream::Ntp)) {
    raw_udp(dst, kNtpPort, source_address(node.id, dst), kNtpPort, AppKind::NtpSync, packet_size::kNtp,
            {}, *arrival + latency(Stream::Ntp));
  }
}

Trace Engine::capture(std::vector<Label> labels) const {
  Trace tr;
  const auto& topo = topology();
  for (const auto& ev : emitted_) {
    if (topo.in_capture_scope(ev.src) || topo.in_capture_scope(ev.dst)) tr.packets.push_back(ev);
  }
  std::stable_sort(tr.packets.begin(), tr.packets.end(),
                   [](const PacketEvent& a, const PacketEvent& b) { return a.t < b.t; });
  tr.syslog = syslog_;
  std::stable_sort(tr.syslog.begin(), tr.syslog.end(),
                   [](const SyslogEvent& a, const SyslogEvent& b) { return a.received < b.received; });
  tr.labels = std::move(labels);
  return tr;
}

}  // namespace rangesim
