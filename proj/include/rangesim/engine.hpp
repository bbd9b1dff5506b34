// SPDX-License-Identifier: Apache-2.0
//
// Deterministic discrete-event core. The engine owns the mutable runtime
// state of a scenario (service up/down, DNS cache, database, VPN tunnels),
// synthesizes packet and syslog events from protocol templates, and
// materializes what the logging server captures.
//
// Every random draw comes from one of three seeded streams: attacker
// actions, benign flows and NTP syncs. Background generation is
// independent of how the clock is advanced.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rangesim/actions.hpp"
#include "rangesim/rng.hpp"
#include "rangesim/scenario.hpp"

namespace rangesim {

enum class Proto : std::uint8_t { Tcp, Udp };

enum class AppKind : std::uint8_t {
  None,
  DnsQuery,
  DnsResponse,
  HttpGet,
  HttpResponse,
  SshBanner,
  SshDhKex,
  SshAuthAttempt,
  SshAuthResult,
  TlsHandshake,
  VpnData,
  SmbCommand,
  SyslogMsg,
  NtpSync,
};

std::string_view to_string(Proto v);
std::string_view to_string(AppKind v);
Proto parse_proto(std::string_view text);
AppKind parse_app_kind(std::string_view text);

/// TCP flag set using the on-the-wire bit values.
struct TcpFlags {
  static constexpr std::uint8_t FIN = 0x01;
  static constexpr std::uint8_t SYN = 0x02;
  static constexpr std::uint8_t RST = 0x04;
  static constexpr std::uint8_t PSH = 0x08;
  static constexpr std::uint8_t ACK = 0x10;

  std::uint8_t bits = 0;

  bool has(std::uint8_t f) const { return (bits & f) == f; }
  bool empty() const { return bits == 0; }
  bool is_syn_only() const { return bits == SYN; }
  /// Names in canonical order, e.g. {"SYN", "ACK"}.
  std::vector<std::string_view> names() const;
  static TcpFlags from_names(const std::vector<std::string>& names);

  friend bool operator==(TcpFlags, TcpFlags) = default;
};

using Meta = std::map<std::string, std::string>;

struct PacketEvent {
  std::uint64_t seq = 0;
  SimTime t{0};
  std::uint64_t conn = 0;  // 0 for connectionless datagrams
  Ipv4 src;
  std::uint16_t src_port = 0;
  Ipv4 dst;
  std::uint16_t dst_port = 0;
  Proto proto = Proto::Tcp;
  TcpFlags flags;
  AppKind app = AppKind::None;
  std::uint32_t size = 0;
  Meta meta;

  friend bool operator==(const PacketEvent&, const PacketEvent&) = default;
};

struct SyslogEvent {
  std::uint64_t seq = 0;
  SimTime received{0};  // engine time the line was logged
  SimTime t{0};         // the emitting node's (possibly skewed) clock
  NodeId host;
  int facility = 1;
  int severity = 6;
  std::string tag;
  std::string message;

  friend bool operator==(const SyslogEvent&, const SyslogEvent&) = default;
};

/// Ground-truth annotation of one attacker action.
struct Label {
  SimTime start{0};
  SimTime end{0};
  ActionKind kind = ActionKind::ScanSubnet;
  NodeId attacker;

  friend bool operator==(const Label&, const Label&) = default;
};

struct Trace {
  std::vector<PacketEvent> packets;  // ordered by (t, seq)
  std::vector<SyslogEvent> syslog;   // ordered by (received, seq)
  std::vector<Label> labels;

  friend bool operator==(const Trace&, const Trace&) = default;
};

/// Template sizes in bytes, one record per packet-equivalent.
namespace packet_size {
inline constexpr std::uint32_t kSyn = 60;
inline constexpr std::uint32_t kSynAck = 60;
inline constexpr std::uint32_t kAck = 52;
inline constexpr std::uint32_t kRst = 40;
inline constexpr std::uint32_t kFin = 52;
inline constexpr std::uint32_t kDnsQuery = 74;
inline constexpr std::uint32_t kDnsResponse = 90;
inline constexpr std::uint32_t kHttpGet = 250;
inline constexpr std::uint32_t kHttpResponse = 1200;
inline constexpr std::uint32_t kSshBanner = 87;
inline constexpr std::uint32_t kSshDhKex = 1024;
inline constexpr std::uint32_t kSshAuthAttempt = 120;
inline constexpr std::uint32_t kSshAuthResult = 80;
inline constexpr std::uint32_t kTlsHandshake = 517;
inline constexpr std::uint32_t kSmbCommand = 200;
inline constexpr std::uint32_t kNtp = 76;
inline constexpr std::uint32_t kTunnelOverhead = 41;
inline constexpr std::uint32_t kChunk = 1400;
}  // namespace packet_size

inline constexpr SimTime kLinkLatency = ms(1);
inline constexpr SimTime kFilteredTimeout = ms(1000);
inline constexpr SimTime kPoisonTtl = seconds(300);
inline constexpr std::size_t kMaxSshAttempts = 6;
inline constexpr std::string_view kCorpDomain = "corp.example";

/// Syslog facility codes used by the templates.
namespace facility {
inline constexpr int kKern = 0;
inline constexpr int kUser = 1;
inline constexpr int kDaemon = 3;
inline constexpr int kAuth = 4;
}  // namespace facility

enum class ConnOutcome { Open, Refused, Filtered };
std::string_view to_string(ConnOutcome v);

/// Which seeded stream supplies latency jitter for a template.
enum class Stream { Action, Flow, Ntp };

struct Connection {
  std::uint64_t id = 0;
  ConnOutcome outcome = ConnOutcome::Filtered;
  NodeId client_node;
  Ipv4 client;
  std::uint16_t client_port = 0;
  Ipv4 server;
  std::uint16_t server_port = 0;
  SimTime t{0};  // time of the latest event on this connection
  bool tunneled = false;
  Stream stream = Stream::Action;
};

enum class Direction { ToServer, ToClient };

struct DnsResult {
  bool responded = false;
  std::optional<std::string> answer;  // address or PTR name; nullopt = NXDOMAIN/SERVFAIL
  SimTime end{0};
};

struct Credential {
  std::string username;
  std::string password;
  friend bool operator==(const Credential&, const Credential&) = default;
};

struct SshResult {
  Connection conn;
  bool success = false;
  std::size_t attempts_made = 0;
  SimTime end{0};
};

struct HttpResult {
  Connection conn;
  int status = 0;  // 0 when no HTTP exchange happened
  std::size_t rows = 0;
  std::string summary;
  std::optional<std::string> field;  // value extracted by an injected query
  SimTime end{0};
};

/// A file a host holds; exfiltration moves `bytes` bytes.
struct FileEntry {
  std::string path;
  std::uint64_t bytes = 0;
  friend bool operator==(const FileEntry&, const FileEntry&) = default;
};

std::vector<FileEntry> file_manifest(NodeRole role);

/// Employee table columns in extraction order.
std::span<const std::string_view> employee_columns();
std::string employee_field(const EmployeeRecord& r, std::string_view column);

class Engine {
 public:
  explicit Engine(Scenario scenario);

  const Scenario& scenario() const { return scenario_; }
  const Topology& topology() const { return scenario_.topology; }
  const CredentialStore& database() const { return database_; }

  SimTime now() const { return now_; }
  /// Generates background traffic up to t and moves the clock there. The
  /// clock never runs backwards.
  void advance_to(SimTime t);

  // Primitives. Each emits events starting at `at` and reports the time of
  // its last event.
  Connection tcp_connect(const NodeId& client, Ipv4 dst, std::uint16_t port, SimTime at,
                         Stream stream = Stream::Action);
  /// Like tcp_connect, but an open port is closed by the client with RST
  /// right after the handshake (connect-scan behaviour).
  Connection tcp_probe(const NodeId& client, Ipv4 dst, std::uint16_t port, SimTime at);
  SimTime send(Connection& conn, Direction dir, AppKind app, std::uint32_t size, Meta meta,
               SimTime at);
  SimTime close(Connection& conn, Direction dir, bool reset, SimTime at);
  /// Connectionless datagram from a node. Returns the arrival time, or
  /// nullopt when the datagram is dropped on the way.
  std::optional<SimTime> udp(const NodeId& src, Ipv4 dst, std::uint16_t port, AppKind app,
                             std::uint32_t size, Meta meta, SimTime at,
                             Stream stream = Stream::Action);
  /// Datagram with an arbitrary (possibly spoofed) source address.
  SimTime raw_udp(Ipv4 src, std::uint16_t src_port, Ipv4 dst, std::uint16_t dst_port, AppKind app,
                  std::uint32_t size, Meta meta, SimTime at);

  DnsResult dns_query(const NodeId& src, Ipv4 resolver, const std::string& name, bool ptr,
                      SimTime at, Stream stream = Stream::Action);
  /// One SSH connection carrying 1..6 password attempts. Throws
  /// ContractError outside that range.
  SshResult ssh_connection(const NodeId& src, Ipv4 dst, std::span<const Credential> attempts,
                           SimTime at, Stream stream = Stream::Action);
  HttpResult http_get(const NodeId& src, Ipv4 dst, std::uint16_t port, const std::string& path,
                      const Meta& params, SimTime at, Stream stream = Stream::Action);

  /// Records a syslog line at `host` and forwards it to the logging server.
  void syslog(const NodeId& host, int facility, int severity, std::string tag,
              std::string message, SimTime at);

  // Runtime state.
  bool service_up(const NodeSpec& node, std::uint16_t port, SimTime at) const;
  void disable_service(const NodeId& node, std::uint16_t port, SimTime at);
  int content_version(const NodeId& node) const;
  void bump_content(const NodeId& node);
  int db_version() const { return db_version_; }
  void change_database(SimTime at);
  void open_listener(const NodeId& node, std::uint16_t port);
  void poison_dns(const std::string& name, Ipv4 addr, SimTime from);
  std::optional<Ipv4> cached_poison(const std::string& name, SimTime at) const;
  /// Establishes a VPN tunnel for `client` over an open VPN connection and
  /// returns the tunnel address handed out by the server.
  Ipv4 open_tunnel(const NodeId& client, const Connection& vpn_conn);
  std::optional<Ipv4> tunnel_address(const NodeId& client) const;
  /// Source address a node uses towards dst (tunnel address for VPN hosts).
  Ipv4 source_address(const NodeId& node, Ipv4 dst) const;
  Reachability route(const NodeId& src, Ipv4 dst, std::uint16_t port) const;
  std::string banner(const NodeSpec& node, const ServiceSpec& service) const;
  std::optional<Ipv4> resolve_internal(const std::string& name) const;

  /// All events emitted so far, in emission order, captured or not.
  const std::vector<PacketEvent>& emitted() const { return emitted_; }
  const std::vector<SyslogEvent>& syslog_events() const { return syslog_; }
  std::uint64_t next_seq() const { return next_seq_; }

  /// The logging server's view: captured packets and all forwarded syslog.
  Trace capture(std::vector<Label> labels = {}) const;

  void on_packet(std::function<void(const PacketEvent&)> fn) { packet_observers_.push_back(std::move(fn)); }
  void on_syslog(std::function<void(const SyslogEvent&)> fn) { syslog_observers_.push_back(std::move(fn)); }

 private:
  struct Tunnel {
    Ipv4 address;
    Connection carrier;
  };

  Rng& rng(Stream s);
  SimTime latency(Stream s);
  std::uint16_t ephemeral_port(const NodeId& node, Stream s);
  void emit(PacketEvent ev);
  void emit_on(Connection& conn, Direction dir, TcpFlags flags, AppKind app, std::uint32_t size,
               Meta meta, SimTime at);
  Connection connect_impl(const NodeId& client, Ipv4 dst, std::uint16_t port, SimTime at,
                          Stream stream);
  void generate_background(SimTime until);
  void background_flow(SimTime at);
  void ntp_sync(const NodeSpec& node, SimTime at);
  struct Datagram {
    std::optional<SimTime> arrival;
    Ipv4 src;
    std::uint16_t src_port = 0;
    bool tunneled = false;
  };
  Datagram datagram(const NodeId& src, Ipv4 dst, std::uint16_t port, AppKind app,
                    std::uint32_t size, Meta meta, SimTime at, Stream stream);
  void mirror(const NodeId& client, Direction dir, std::uint32_t size, SimTime t);

  Scenario scenario_;
  CredentialStore database_;
  int db_version_ = 0;
  SimTime now_{0};
  Rng action_rng_;
  Rng flow_rng_;
  Rng ntp_rng_;
  std::uint64_t next_seq_ = 1;
  std::uint64_t next_conn_ = 1;

  std::vector<PacketEvent> emitted_;
  std::vector<SyslogEvent> syslog_;
  std::vector<std::function<void(const PacketEvent&)>> packet_observers_;
  std::vector<std::function<void(const SyslogEvent&)>> syslog_observers_;

  std::map<std::pair<NodeId, Stream>, std::uint16_t> ports_;
  std::map<std::pair<NodeId, std::uint16_t>, SimTime> disabled_since_;
  std::set<std::pair<NodeId, std::uint16_t>> listeners_;
  std::map<NodeId, int> content_version_;
  struct Poison {
    Ipv4 addr;
    SimTime from{0};
    SimTime until{0};
  };
  std::map<std::string, Poison> dns_cache_;
  std::map<NodeId, Tunnel> tunnels_;

  // Background generation state.
  SimTime bg_horizon_{0};
  SimTime next_flow_{0};
  bool flows_enabled_ = false;
  std::vector<std::size_t> employee_hosts_;  // node indices
  std::vector<std::pair<SimTime, std::size_t>> ntp_next_;  // (next sync, node index)
};

}  // namespace rangesim
