// SPDX-License-Identifier: Apache-2.0

#include "rangesim/traceio.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <type_traits>
#include <variant>

namespace rangesim {

namespace {

// Strict object reader: every access is recorded so done() can reject
// fields nobody asked for. Errors carry a $.path prefix.
class Fields {
 public:
  Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) fail(path_, "expected an object");
  }

  const std::string& path() const { return path_; }
  std::string sub(std::string_view key) const { return path_ + "." + std::string(key); }
  bool has(std::string_view key) const { return j_.contains(std::string(key)); }

  const Json& at(std::string_view key) {
    seen_.emplace(key);
    auto it = j_.find(std::string(key));
    if (it == j_.end()) fail(sub(key), "missing required field");
    return *it;
  }

  template <class T>
  T get(std::string_view key) {
    return as<T>(at(key), sub(key));
  }

  template <class T>
  T get_or(std::string_view key, T fallback) {
    if (!has(key)) return fallback;
    return get<T>(key);
  }

  template <class F>
  auto parse(std::string_view key, F&& parser) {
    const auto text = get<std::string>(key);
    try {
      return parser(text);
    } catch (const ParseError& e) {
      fail(sub(key), e.what());
    }
  }

  template <class F>
  auto parse_or(std::string_view key, F&& parser, decltype(parser(std::string{})) fallback) {
    if (!has(key)) return fallback;
    return parse(key, parser);
  }

  void done() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) fail(sub(key), "unknown field");
    }
  }

  [[noreturn]] static void fail(const std::string& path, std::string_view msg) {
    throw ParseError(path + ": " + std::string(msg));
  }

  template <class T>
  static T as(const Json& j, const std::string& path) {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!j.is_string()) fail(path, "expected a string");
      return j.get<std::string>();
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!j.is_boolean()) fail(path, "expected a boolean");
      return j.get<bool>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!j.is_number()) fail(path, "expected a number");
      return j.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (j.is_number_unsigned()) {
        const auto v = j.get<std::uint64_t>();
        if (v > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) fail(path, "out of range");
        return static_cast<T>(v);
      }
      if (j.is_number_integer()) {
        const auto v = j.get<std::int64_t>();
        if (v < static_cast<std::int64_t>(std::numeric_limits<T>::min()) ||
            (v > 0 && static_cast<std::uint64_t>(v) > static_cast<std::uint64_t>(std::numeric_limits<T>::max()))) {
          fail(path, "out of range");
        }
        return static_cast<T>(v);
      }
      fail(path, "expected an integer");
    } else {
      static_assert(sizeof(T) == 0, "unsupported field type");
    }
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string, std::less<>> seen_;
};

const Json& array_at(Fields& f, std::string_view key) {
  const Json& a = f.at(key);
  if (!a.is_array()) Fields::fail(f.sub(key), "expected an array");
  return a;
}

std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

template <class T, class F>
std::vector<T> array_of(Fields& f, std::string_view key, F&& element) {
  std::vector<T> out;
  const Json& a = array_at(f, key);
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(element(a[i], index(f.sub(key), i)));
  return out;
}

template <class F>
auto parse_value(const Json& j, const std::string& path, F&& parser) {
  const auto text = Fields::as<std::string>(j, path);
  try {
    return parser(text);
  } catch (const ParseError& e) {
    Fields::fail(path, e.what());
  }
}

Ipv4 parse_ip(std::string_view s) { return Ipv4::parse(s); }
Cidr parse_cidr(std::string_view s) { return Cidr::parse(s); }
SimTime us(std::int64_t v) { return SimTime(v); }

std::string meta_string(const Meta& meta) {
  std::string s;
  for (const auto& [k, v] : meta) {
    s += k;
    s += '=';
    s += v;
    s += ';';
  }
  return s;
}

void put16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v >> 8));
  out.push_back(static_cast<char>(v & 0xFF));
}

void put32(std::string& out, std::uint32_t v) {
  put16(out, static_cast<std::uint16_t>(v >> 16));
  put16(out, static_cast<std::uint16_t>(v & 0xFFFF));
}

void put32le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put16le(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

}  // namespace

// Packet capture ------------------------------------------------------------

std::string packet_bytes(const PacketEvent& p) {
  const bool tcp = p.proto == Proto::Tcp;
  const std::size_t l4 = tcp ? 20 : 8;
  std::string payload;
  if (p.app != AppKind::None || !p.meta.empty()) {
    std::string meta = meta_string(p.meta);
    const std::size_t room = 65535 - 20 - l4 - 3;
    if (meta.size() > room) meta.resize(room);
    payload.push_back(static_cast<char>(p.app));
    put16(payload, static_cast<std::uint16_t>(meta.size()));
    payload += meta;
  }
  const auto total = static_cast<std::uint16_t>(20 + l4 + payload.size());

  std::string out;
  out.reserve(total);
  out.push_back(0x45);
  out.push_back(0);
  put16(out, total);
  put16(out, static_cast<std::uint16_t>(p.seq & 0xFFFF));
  put16(out, 0x4000);  // DF
  out.push_back(64);
  out.push_back(tcp ? 6 : 17);
  put16(out, 0);
  put32(out, p.src.value());
  put32(out, p.dst.value());
  put16(out, p.src_port);
  put16(out, p.dst_port);
  if (tcp) {
    put32(out, 0);
    put32(out, 0);
    out.push_back(0x50);
    out.push_back(static_cast<char>(p.flags.bits));
    put16(out, 0xFFFF);
    put16(out, 0);
    put16(out, 0);
  } else {
    put16(out, static_cast<std::uint16_t>(8 + payload.size()));
    put16(out, 0);
  }
  out += payload;
  return out;
}

std::string write_pcap(const Trace& trace) {
  std::string out;
  put32le(out, 0xA1B2C3D4);
  put16le(out, 2);
  put16le(out, 4);
  put32le(out, 0);
  put32le(out, 0);
  put32le(out, 65535);
  put32le(out, 101);
  for (const auto& p : trace.packets) {
    const std::string bytes = packet_bytes(p);
    const auto t = p.t.count();
    put32le(out, static_cast<std::uint32_t>(t / 1'000'000));
    put32le(out, static_cast<std::uint32_t>(t % 1'000'000));
    put32le(out, static_cast<std::uint32_t>(bytes.size()));
    put32le(out, static_cast<std::uint32_t>(bytes.size()));
    out += bytes;
  }
  return out;
}

// Syslog --------------------------------------------------------------------

std::string syslog_line(const SyslogEvent& e) {
  using namespace std::chrono;
  static constexpr const char* kMonths[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                            "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  const sys_seconds tp{std::chrono::seconds(kSyslogEpoch) + floor<std::chrono::seconds>(e.t)};
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss hms{tp - day};
  char stamp[32];
  std::snprintf(stamp, sizeof stamp, "%s %2u %02d:%02d:%02d", kMonths[unsigned(ymd.month()) - 1],
                unsigned(ymd.day()), static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()), static_cast<int>(hms.seconds().count()));
  return "<" + std::to_string(e.facility * 8 + e.severity) + ">" + stamp + " " + e.host + " " + e.tag +
         ": " + e.message;
}

std::string write_syslog(const Trace& trace) {
  std::string out;
  for (const auto& e : trace.syslog) {
    out += syslog_line(e);
    out += '\n';
  }
  return out;
}

// Event log -----------------------------------------------------------------

Json to_json(const PacketEvent& p) {
  Json flags = Json::array();
  for (auto n : p.flags.names()) flags.push_back(std::string(n));
  Json meta = Json::object();
  for (const auto& [k, v] : p.meta) meta[k] = v;
  return {{"type", "packet"},  {"seq", p.seq},           {"t_us", p.t.count()},
          {"conn", p.conn},    {"src", p.src.str()},     {"sport", p.src_port},
          {"dst", p.dst.str()}, {"dport", p.dst_port},   {"proto", to_string(p.proto)},
          {"flags", flags},    {"app", to_string(p.app)}, {"size", p.size},
          {"meta", meta}};
}

PacketEvent packet_from_json(const Json& j) {
  Fields f(j, "$");
  if (f.get<std::string>("type") != "packet") Fields::fail(f.sub("type"), "expected \"packet\"");
  PacketEvent p;
  p.seq = f.get<std::uint64_t>("seq");
  p.t = us(f.get<std::int64_t>("t_us"));
  p.conn = f.get<std::uint64_t>("conn");
  p.src = f.parse("src", parse_ip);
  p.src_port = f.get<std::uint16_t>("sport");
  p.dst = f.parse("dst", parse_ip);
  p.dst_port = f.get<std::uint16_t>("dport");
  p.proto = f.parse("proto", parse_proto);
  auto names = array_of<std::string>(f, "flags", Fields::as<std::string>);
  try {
    p.flags = TcpFlags::from_names(names);
  } catch (const ParseError& e) {
    Fields::fail(f.sub("flags"), e.what());
  }
  p.app = f.parse("app", parse_app_kind);
  p.size = f.get<std::uint32_t>("size");
  const Json& meta = f.at("meta");
  if (!meta.is_object()) Fields::fail(f.sub("meta"), "expected an object");
  for (const auto& [k, v] : meta.items()) p.meta[k] = Fields::as<std::string>(v, f.sub("meta") + "." + k);
  f.done();
  return p;
}

Json to_json(const SyslogEvent& e) {
  return {{"type", "syslog"},         {"seq", e.seq},           {"received_us", e.received.count()},
          {"t_us", e.t.count()},      {"host", e.host},         {"facility", e.facility},
          {"severity", e.severity},   {"tag", e.tag},           {"message", e.message}};
}

SyslogEvent syslog_from_json(const Json& j) {
  Fields f(j, "$");
  if (f.get<std::string>("type") != "syslog") Fields::fail(f.sub("type"), "expected \"syslog\"");
  SyslogEvent e;
  e.seq = f.get<std::uint64_t>("seq");
  e.received = us(f.get<std::int64_t>("received_us"));
  e.t = us(f.get<std::int64_t>("t_us"));
  e.host = f.get<std::string>("host");
  e.facility = f.get<int>("facility");
  e.severity = f.get<int>("severity");
  e.tag = f.get<std::string>("tag");
  e.message = f.get<std::string>("message");
  f.done();
  return e;
}

Json to_json(const Label& l) {
  return {{"type", "label"},
          {"start_us", l.start.count()},
          {"end_us", l.end.count()},
          {"kind", to_string(l.kind)},
          {"attacker", l.attacker}};
}

Label label_from_json(const Json& j) {
  Fields f(j, "$");
  if (f.get<std::string>("type") != "label") Fields::fail(f.sub("type"), "expected \"label\"");
  Label l;
  l.start = us(f.get<std::int64_t>("start_us"));
  l.end = us(f.get<std::int64_t>("end_us"));
  l.kind = f.parse("kind", parse_action_kind);
  l.attacker = f.get<std::string>("attacker");
  f.done();
  return l;
}

std::string write_events(const Trace& trace) {
  std::string out;
  auto line = [&](const Json& j) {
    out += j.dump();
    out += '\n';
  };
  line({{"type", "header"}, {"format", "rangesim-events"}, {"version", 1}});
  for (const auto& p : trace.packets) line(to_json(p));
  for (const auto& e : trace.syslog) line(to_json(e));
  for (const auto& l : trace.labels) line(to_json(l));
  line({{"type", "end"},
        {"packets", trace.packets.size()},
        {"syslog", trace.syslog.size()},
        {"labels", trace.labels.size()}});
  return out;
}

Trace read_events(std::string_view text) {
  Trace trace;
  std::size_t line_no = 0;
  std::size_t last_good = 0;
  bool header = false;
  bool ended = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const auto raw = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    const auto where = [&](std::string_view msg) {
      return "line " + std::to_string(line_no) + ": " + std::string(msg) + " (last good line " +
             std::to_string(last_good) + ")";
    };
    if (ended) throw ParseError(where("content after end record"));
    Json j;
    try {
      j = Json::parse(raw);
    } catch (const Json::parse_error&) {
      throw ParseError(where("malformed JSON"));
    }
    try {
      Fields peek(j, "$");
      const auto type = peek.get<std::string>("type");
      if (!header) {
        if (type != "header") throw ParseError("$.type: first record must be the header");
        Fields f(j, "$");
        f.at("type");
        if (f.get<std::string>("format") != "rangesim-events") Fields::fail(f.sub("format"), "unknown format");
        if (f.get<int>("version") != 1) Fields::fail(f.sub("version"), "unsupported version");
        f.done();
        header = true;
      } else if (type == "packet") {
        trace.packets.push_back(packet_from_json(j));
      } else if (type == "syslog") {
        trace.syslog.push_back(syslog_from_json(j));
      } else if (type == "label") {
        trace.labels.push_back(label_from_json(j));
      } else if (type == "end") {
        Fields f(j, "$");
        f.at("type");
        if (f.get<std::size_t>("packets") != trace.packets.size() ||
            f.get<std::size_t>("syslog") != trace.syslog.size() ||
            f.get<std::size_t>("labels") != trace.labels.size()) {
          throw ParseError("record counts do not match the end record");
        }
        f.done();
        ended = true;
      } else {
        Fields::fail("$.type", "unknown record type '" + type + "'");
      }
    } catch (const ParseError& e) {
      throw ParseError(where(e.what()));
    }
    last_good = line_no;
  }
  if (!ended) {
    throw ParseError("truncated event log: no end record (last good line " + std::to_string(last_good) + ")");
  }
  return trace;
}

// Scenario documents ---------------------------------------------------------

namespace {

std::string endpoint_str(const RuleEndpoint& e) {
  switch (e.kind) {
    case RuleEndpoint::Kind::Any: return "any";
    case RuleEndpoint::Kind::External: return "external";
    case RuleEndpoint::Kind::Subnet: return "subnet:" + std::string(to_string(e.subnet));
    case RuleEndpoint::Kind::Node: return "node:" + e.node;
  }
  return "any";
}

RuleEndpoint parse_endpoint(std::string_view s) {
  if (s == "any") return RuleEndpoint::any();
  if (s == "external") return RuleEndpoint::external();
  if (s.starts_with("subnet:")) return RuleEndpoint::of_subnet(parse_subnet_label(s.substr(7)));
  if (s.starts_with("node:") && s.size() > 5) return RuleEndpoint::of_node(std::string(s.substr(5)));
  throw ParseError("expected any, external, subnet:<label> or node:<id>, got '" + std::string(s) + "'");
}

ServiceSpec service_from_json(const Json& j, const std::string& path) {
  Fields f(j, path);
  ServiceSpec s;
  s.kind = f.parse("kind", parse_service_kind);
  s.port = f.get_or<std::uint16_t>("port", default_port(s.kind));
  s.enabled = f.get_or("enabled", true);
  f.done();
  return s;
}

NodeSpec node_from_json(const Json& j, const std::string& path) {
  Fields f(j, path);
  NodeSpec n;
  n.id = f.get<std::string>("id");
  n.role = f.parse("role", parse_node_role);
  n.addresses = array_of<NodeAddress>(f, "addresses", [](const Json& a, const std::string& p) {
    Fields af(a, p);
    NodeAddress na{af.parse("addr", parse_ip), af.parse("subnet", parse_subnet_label)};
    af.done();
    return na;
  });
  if (f.has("services")) n.services = array_of<ServiceSpec>(f, "services", service_from_json);
  if (f.has("vulnerabilities")) {
    n.vulnerabilities = array_of<VulnId>(f, "vulnerabilities", [](const Json& v, const std::string& p) {
      return parse_value(v, p, parse_vuln_id);
    });
  }
  n.clock_offset_ms = f.get_or<std::int64_t>("clock_offset_ms", 0);
  n.internet_egress = f.get_or("internet_egress", false);
  f.done();
  return n;
}

}  // namespace

Json to_json(const Topology& t) {
  Json subnets = Json::array();
  for (const auto& s : t.subnets) subnets.push_back({{"label", to_string(s.label)}, {"cidr", s.cidr.str()}});
  Json nodes = Json::array();
  for (const auto& n : t.nodes) {
    Json addrs = Json::array();
    for (const auto& a : n.addresses) addrs.push_back({{"addr", a.addr.str()}, {"subnet", to_string(a.subnet)}});
    Json services = Json::array();
    for (const auto& s : n.services) {
      services.push_back({{"kind", to_string(s.kind)}, {"port", s.port}, {"enabled", s.enabled}});
    }
    Json vulns = Json::array();
    for (auto v : n.vulnerabilities) vulns.push_back(to_string(v));
    nodes.push_back({{"id", n.id},
                     {"role", to_string(n.role)},
                     {"addresses", addrs},
                     {"services", services},
                     {"vulnerabilities", vulns},
                     {"clock_offset_ms", n.clock_offset_ms},
                     {"internet_egress", n.internet_egress}});
  }
  Json links = Json::array();
  for (const auto& [a, b] : t.router_links) links.push_back({to_string(a), to_string(b)});
  Json rules = Json::array();
  for (const auto& r : t.firewall_rules) {
    Json rule = {{"src", endpoint_str(r.src)}, {"dst", endpoint_str(r.dst)}};
    if (r.port) rule["port"] = *r.port;
    rule["action"] = r.allow ? "allow" : "deny";
    rules.push_back(rule);
  }
  Json scope = Json::array();
  for (auto s : t.capture_scope) scope.push_back(to_string(s));
  return {{"subnets", subnets},
          {"nodes", nodes},
          {"router_links", links},
          {"firewall", rules},
          {"capture_scope", scope}};
}

Topology topology_from_json(const Json& j) {
  Fields f(j, "$");
  Topology t;
    t.subnets = array_of<Subnet>(f, "subnets", [](const Json& s, const std::string& p) {
      Fields sf(s, p);
      Subnet sub{sf.parse("label", parse_subnet_label), sf.parse("cidr", parse_cidr)};
      sf.done();
      return sub;
    });
    t.nodes = array_of<NodeSpec>(f, "nodes", node_from_json);
    if (f.has("router_links")) {
      t.router_links = array_of<std::pair<SubnetLabel, SubnetLabel>>(
          f, "router_links", [](const Json& l, const std::string& p) {
            if (!l.is_array() || l.size() != 2) Fields::fail(p, "expected a pair of subnet labels");
            return std::pair{parse_value(l[0], p + "[0]", parse_subnet_label),
                             parse_value(l[1], p + "[1]", parse_subnet_label)};
          });
    }
    if (f.has("firewall")) {
      t.firewall_rules = array_of<FirewallRule>(f, "firewall", [](const Json& r, const std::string& p) {
        Fields rf(r, p);
        FirewallRule rule;
        rule.src = rf.parse("src", parse_endpoint);
        rule.dst = rf.parse("dst", parse_endpoint);
        if (rf.has("port")) rule.port = rf.get<std::uint16_t>("port");
        const auto action = rf.get<std::string>("action");
        if (action != "allow" && action != "deny") Fields::fail(rf.sub("action"), "expected allow or deny");
        rule.allow = action == "allow";
        rf.done();
        return rule;
      });
    }
    if (f.has("capture_scope")) {
      t.capture_scope = array_of<SubnetLabel>(f, "capture_scope", [](const Json& s, const std::string& p) {
        return parse_value(s, p, parse_subnet_label);
      });
    }
  f.done();
  return t;
}

Json to_json(const AttackAction& a) {
  Json j = {{"kind", to_string(a.kind)}};
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, ScanParams>) {
          j["cidr"] = p.cidr.str();
          if (!p.ports.empty()) j["ports"] = p.ports;
        } else if constexpr (std::is_same_v<P, BruteForceParams>) {
          j["target"] = p.target.str();
          j["username"] = p.username;
          j["dictionary_size"] = p.dictionary_size;
          if (!p.words.empty()) j["words"] = p.words;
        } else if constexpr (std::is_same_v<P, SqliParams>) {
          j["target"] = p.target.str();
          j["port"] = p.port;
        } else if constexpr (std::is_same_v<P, VpnConnectParams>) {
          j["server"] = p.server.str();
          j["username"] = p.username;
          j["password"] = p.password;
        } else if constexpr (std::is_same_v<P, DnsPoisonParams>) {
          j["dns_server"] = p.dns_server.str();
          j["victim_name"] = p.victim_name;
          j["attacker_addr"] = p.attacker_addr.str();
        } else if constexpr (std::is_same_v<P, TargetParams>) {
          j["target"] = p.target.str();
        } else if constexpr (std::is_same_v<P, DisableServiceParams>) {
          j["target"] = p.target.str();
          j["service"] = to_string(p.service);
        } else if constexpr (std::is_same_v<P, LateralMoveParams>) {
          j["to"] = p.to.str();
          if (p.from) j["from"] = *p.from;
        } else if constexpr (std::is_same_v<P, PhishParams>) {
          j["sender"] = p.sender;
          j["recipient"] = p.recipient;
        }
      },
      a.params);
  return j;
}

namespace {

AttackAction action_at(const Json& j, const std::string& path) {
  Fields f(j, path);
  const auto kind = f.parse("kind", parse_action_kind);
  AttackAction a;
  switch (kind) {
    case ActionKind::ScanSubnet: {
      std::vector<std::uint16_t> ports;
      if (f.has("ports")) ports = array_of<std::uint16_t>(f, "ports", Fields::as<std::uint16_t>);
      a = AttackAction::scan(f.parse("cidr", parse_cidr), std::move(ports));
      break;
    }
    case ActionKind::SshBruteForce: {
      const auto target = f.parse("target", parse_ip);
      auto user = f.get<std::string>("username");
      if (f.has("words")) {
        a = AttackAction::brute_force_words(target, std::move(user),
                                            array_of<std::string>(f, "words", Fields::as<std::string>));
        auto& p = std::get<BruteForceParams>(a.params);
        p.dictionary_size = f.get_or<std::size_t>("dictionary_size", p.words.size());
      } else {
        a = AttackAction::brute_force(target, std::move(user), f.get_or<std::size_t>("dictionary_size", 1000));
      }
      break;
    }
    case ActionKind::SqliProbe:
    case ActionKind::SqliDump:
      a = {kind, SqliParams{f.parse("target", parse_ip), f.get_or<std::uint16_t>("port", 8080)}};
      break;
    case ActionKind::VpnConnect:
      a = AttackAction::vpn_connect(f.parse("server", parse_ip), f.get<std::string>("username"),
                                    f.get<std::string>("password"));
      break;
    case ActionKind::DnsPoison:
      a = AttackAction::dns_poison(f.parse("dns_server", parse_ip), f.get<std::string>("victim_name"),
                                   f.parse("attacker_addr", parse_ip));
      break;
    case ActionKind::SmbReverseShell:
    case ActionKind::ExfiltrateFiles:
    case ActionKind::DefaceWebsite:
    case ActionKind::ChangeDbContents:
    case ActionKind::PrivilegeEscalate:
      a = AttackAction::targeted(kind, f.parse("target", parse_ip));
      break;
    case ActionKind::DisableService:
      a = AttackAction::disable_service(f.parse("target", parse_ip), f.parse("service", parse_service_kind));
      break;
    case ActionKind::LateralMove: {
      std::optional<NodeId> from;
      if (f.has("from")) from = f.get<std::string>("from");
      a = AttackAction::lateral_move(f.parse("to", parse_ip), std::move(from));
      break;
    }
    case ActionKind::SendPhish:
      a = AttackAction::send_phish(f.get<std::string>("sender"), f.get<std::string>("recipient"));
      break;
  }
  f.done();
  return a;
}

ScenarioDoc scenario_at(const Json& j) {
  Fields f(j, "$");
  ScenarioDoc doc;
  doc.name = f.get_or<std::string>("name", doc.name);
  doc.preset.reset();
  if (f.has("preset")) doc.preset = f.parse("preset", parse_preset);
  if (f.has("topology")) {
    try {
      doc.topology = topology_from_json(f.at("topology"));
    } catch (const ParseError& e) {
      // Re-anchor "$..." paths under $.topology.
      std::string msg = e.what();
      if (msg.starts_with("$")) msg = "$.topology" + msg.substr(1);
      throw ParseError(msg);
    }
  }
  if (!doc.preset && !doc.topology) doc.preset = Preset::SME;

  if (f.has("seeds")) {
    const Json& s = f.at("seeds");
    if (s.is_number()) {
      doc.seeds = Seeds::from(Fields::as<std::uint64_t>(s, f.sub("seeds")));
    } else {
      Fields sf(s, f.sub("seeds"));
      doc.seeds.topology = sf.get_or<std::uint64_t>("topology", 1);
      doc.seeds.credentials = sf.get_or<std::uint64_t>("credentials", 1);
      doc.seeds.engine = sf.get_or<std::uint64_t>("engine", 1);
      doc.seeds.attacker = sf.get_or<std::uint64_t>("attacker", 1);
      sf.done();
    }
  }
  doc.employees = f.get_or<std::size_t>("employees", doc.employees);

  if (f.has("vulnerabilities")) {
    doc.vulnerabilities = array_of<VulnToggle>(f, "vulnerabilities", [](const Json& v, const std::string& p) {
      Fields vf(v, p);
      VulnToggle t;
      t.id = vf.parse("id", parse_vuln_id);
      t.node = vf.get<std::string>("node");
      t.enabled = vf.get_or("enabled", true);
      t.weak_rank = vf.get_or<std::size_t>("rank", 0);
      vf.done();
      return t;
    });
  }

  if (f.has("background")) {
    Fields bf(f.at("background"), f.sub("background"));
    auto& bg = doc.background;
    bg.per_employee_rate = bf.get_or("per_employee_rate", bg.per_employee_rate);
    if (bf.has("mix")) {
      Fields mf(bf.at("mix"), bf.sub("mix"));
      bg.webapp_login = mf.get_or("webapp_login", bg.webapp_login);
      bg.file_read = mf.get_or("file_read", bg.file_read);
      bg.dns_lookup = mf.get_or("dns_lookup", bg.dns_lookup);
      mf.done();
    }
    bg.ntp_interval_s = bf.get_or("ntp_interval_s", bg.ntp_interval_s);
    bf.done();
  }

  if (f.has("timing")) {
    Fields tf(f.at("timing"), f.sub("timing"));
    auto& t = doc.timing;
    t.duration_s = tf.get_or("duration_s", t.duration_s);
    t.attack_start_s = tf.get_or("attack_start_s", t.attack_start_s);
    t.think_time_ms = tf.get_or("think_time_ms", t.think_time_ms);
    tf.done();
  }

  if (f.has("detector")) {
    Fields df(f.at("detector"), f.sub("detector"));
    auto& d = doc.detector;
    d.window_s = df.get_or("window_s", d.window_s);
    d.baseline_windows = df.get_or("baseline_windows", d.baseline_windows);
    d.threshold_k = df.get_or("threshold_k", d.threshold_k);
    d.min_count = df.get_or("min_count", d.min_count);
    df.done();
  }

  if (f.has("attacker")) {
    Fields af(f.at("attacker"), f.sub("attacker"));
    auto& a = doc.attacker;
    a.mode = af.parse_or("mode", parse_attacker_mode, a.mode);
    a.profile = af.parse_or("profile", parse_profile, a.profile);
    if (af.has("actions")) a.actions = array_of<AttackAction>(af, "actions", action_at);
    af.done();
  }
  f.done();
  return doc;
}

}  // namespace

AttackAction action_from_json(const Json& j) { return action_at(j, "$"); }

Json to_json(const ScenarioDoc& doc) {
  Json j = {{"name", doc.name}};
  if (doc.preset) j["preset"] = to_string(*doc.preset);
  if (doc.topology) j["topology"] = to_json(*doc.topology);
  j["seeds"] = {{"topology", doc.seeds.topology},
                {"credentials", doc.seeds.credentials},
                {"engine", doc.seeds.engine},
                {"attacker", doc.seeds.attacker}};
  j["employees"] = doc.employees;
  Json vulns = Json::array();
  for (const auto& v : doc.vulnerabilities) {
    vulns.push_back({{"id", to_string(v.id)}, {"node", v.node}, {"enabled", v.enabled}, {"rank", v.weak_rank}});
  }
  j["vulnerabilities"] = vulns;
  const auto& bg = doc.background;
  j["background"] = {{"per_employee_rate", bg.per_employee_rate},
                     {"mix", {{"webapp_login", bg.webapp_login}, {"file_read", bg.file_read},
                              {"dns_lookup", bg.dns_lookup}}},
                     {"ntp_interval_s", bg.ntp_interval_s}};
  j["timing"] = {{"duration_s", doc.timing.duration_s},
                 {"attack_start_s", doc.timing.attack_start_s},
                 {"think_time_ms", doc.timing.think_time_ms}};
  j["detector"] = {{"window_s", doc.detector.window_s},
                   {"baseline_windows", doc.detector.baseline_windows},
                   {"threshold_k", doc.detector.threshold_k},
                   {"min_count", doc.detector.min_count}};
  Json actions = Json::array();
  for (const auto& a : doc.attacker.actions) actions.push_back(to_json(a));
  j["attacker"] = {{"mode", to_string(doc.attacker.mode)},
                   {"profile", to_string(doc.attacker.profile)},
                   {"actions", actions}};
  return j;
}

ScenarioDoc scenario_from_json(const Json& j) {
  try {
    return scenario_at(j);
  } catch (const ParseError& e) {
    throw ScenarioError(e.what());
  }
}

ScenarioDoc parse_scenario(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ScenarioError(std::string("$: malformed JSON: ") + e.what());
  }
  ScenarioDoc doc = scenario_from_json(j);
  materialize(doc);
  return doc;
}

std::string serialize_scenario(const ScenarioDoc& doc) { return to_json(doc).dump(2) + "\n"; }

// Attacker state and recordings ---------------------------------------------

namespace {

Json credential_json(const std::optional<Credential>& c) {
  if (!c) return nullptr;
  return {{"username", c->username}, {"password", c->password}};
}

Json foothold_json(const Foothold& f) {
  return {{"node", f.node},
          {"address", f.address.str()},
          {"privilege", to_string(f.privilege)},
          {"access", to_string(f.access)},
          {"via", f.via},
          {"credential", credential_json(f.credential)}};
}

Foothold foothold_at(const Json& j, const std::string& path) {
  Fields f(j, path);
  Foothold h;
  h.node = f.get<std::string>("node");
  h.address = f.parse("address", parse_ip);
  h.privilege = f.parse("privilege", parse_privilege);
  h.access = f.parse("access", parse_access);
  h.via = f.get<std::string>("via");
  const Json& c = f.at("credential");
  if (!c.is_null()) {
    Fields cf(c, f.sub("credential"));
    h.credential = Credential{cf.get<std::string>("username"), cf.get<std::string>("password")};
    cf.done();
  }
  f.done();
  return h;
}

Json host_json(const KnownHost& h) {
  Json ports = Json::object();
  for (const auto& [port, banner] : h.open_ports) ports[std::to_string(port)] = banner;
  return {{"address", h.address.str()}, {"live", h.live}, {"open_ports", ports}};
}

KnownHost host_at(const Json& j, const std::string& path) {
  Fields f(j, path);
  KnownHost h;
  h.address = f.parse("address", parse_ip);
  h.live = f.get<bool>("live");
  const Json& ports = f.at("open_ports");
  if (!ports.is_object()) Fields::fail(f.sub("open_ports"), "expected an object");
  for (const auto& [k, v] : ports.items()) {
    const std::string p = f.sub("open_ports") + "." + k;
    unsigned long port = 0;
    try {
      std::size_t used = 0;
      port = std::stoul(k, &used);
      if (used != k.size() || port > 65535) throw std::invalid_argument(k);
    } catch (const std::logic_error&) {
      Fields::fail(p, "port keys must be integers in 0..65535");
    }
    h.open_ports[static_cast<std::uint16_t>(port)] = Fields::as<std::string>(v, p);
  }
  f.done();
  return h;
}

Json loot_json(const LootItem& l) {
  Json fields = Json::object();
  for (const auto& [k, v] : l.fields) fields[k] = v;
  return {{"kind", to_string(l.kind)},
          {"name", l.name},
          {"fields", fields},
          {"provenance", l.provenance},
          {"source", to_string(l.source)}};
}

LootItem loot_at(const Json& j, const std::string& path) {
  Fields f(j, path);
  LootItem l;
  l.kind = f.parse("kind", parse_loot_kind);
  l.name = f.get<std::string>("name");
  const Json& fields = f.at("fields");
  if (!fields.is_object()) Fields::fail(f.sub("fields"), "expected an object");
  for (const auto& [k, v] : fields.items()) l.fields[k] = Fields::as<std::string>(v, f.sub("fields") + "." + k);
  l.provenance = f.get<std::size_t>("provenance");
  l.source = f.parse("source", parse_action_kind);
  f.done();
  return l;
}

Json tunnel_json(const TunnelInfo& t) {
  return {{"client", t.client}, {"server", t.server.str()}, {"address", t.address.str()}, {"routes", t.routes.str()}};
}

TunnelInfo tunnel_at(const Json& j, const std::string& path) {
  Fields f(j, path);
  TunnelInfo t{f.get<std::string>("client"), f.parse("server", parse_ip), f.parse("address", parse_ip),
               f.parse("routes", parse_cidr)};
  f.done();
  return t;
}

Json injectable_json(const std::pair<Ipv4, std::uint16_t>& p) {
  return {{"target", p.first.str()}, {"port", p.second}};
}

std::pair<Ipv4, std::uint16_t> injectable_at(const Json& j, const std::string& path) {
  Fields f(j, path);
  std::pair<Ipv4, std::uint16_t> p{f.parse("target", parse_ip), f.get<std::uint16_t>("port")};
  f.done();
  return p;
}

Cidr cidr_at(const Json& j, const std::string& path) { return parse_value(j, path, parse_cidr); }

template <class C, class F>
Json json_list(const C& items, F&& fn) {
  Json a = Json::array();
  for (const auto& x : items) a.push_back(fn(x));
  return a;
}

StateDelta delta_at(const Json& j, const std::string& path) {
  Fields f(j, path);
  StateDelta d;
  d.footholds = array_of<Foothold>(f, "footholds", foothold_at);
  d.hosts = array_of<KnownHost>(f, "hosts", host_at);
  d.subnets = array_of<Cidr>(f, "subnets", cidr_at);
  d.injectable = array_of<std::pair<Ipv4, std::uint16_t>>(f, "injectable", injectable_at);
  d.loot = array_of<LootItem>(f, "loot", loot_at);
  const Json& t = f.at("tunnel");
  if (!t.is_null()) d.tunnel = tunnel_at(t, f.sub("tunnel"));
  const Json& pos = f.at("position");
  if (!pos.is_null()) d.position = Fields::as<std::string>(pos, f.sub("position"));
  d.impacts = array_of<std::string>(f, "impacts", Fields::as<std::string>);
  f.done();
  return d;
}

ActionOutcome outcome_at(const Json& j, const std::string& path) {
  Fields f(j, path);
  ActionOutcome o;
  o.success = f.get<bool>("success");
  o.summary = f.get<std::string>("summary");
  o.t_start = us(f.get<std::int64_t>("t_start_us"));
  o.t_end = us(f.get<std::int64_t>("t_end_us"));
  o.gained = delta_at(f.at("gained"), f.sub("gained"));
  f.done();
  return o;
}

AttackerState state_at(const Json& j, const std::string& path) {
  Fields f(j, path);
  AttackerState s;
  s.entry = f.get<std::string>("entry");
  s.position = f.get<std::string>("position");
  for (auto& h : array_of<Foothold>(f, "footholds", foothold_at)) s.footholds[h.node] = h;
  for (auto& h : array_of<KnownHost>(f, "known_hosts", host_at)) s.known_hosts[h.address] = h;
  for (auto& c : array_of<Cidr>(f, "known_subnets", cidr_at)) s.known_subnets.insert(c);
  s.loot = array_of<LootItem>(f, "loot", loot_at);
  s.tunnels = array_of<TunnelInfo>(f, "tunnels", tunnel_at);
  for (auto& p : array_of<std::pair<Ipv4, std::uint16_t>>(f, "sqli_confirmed", injectable_at)) {
    s.sqli_confirmed.insert(p);
  }
  s.impacts = array_of<std::string>(f, "impacts", Fields::as<std::string>);
  f.done();
  return s;
}

}  // namespace

Json to_json(const StateDelta& d) {
  return {{"footholds", json_list(d.footholds, foothold_json)},
          {"hosts", json_list(d.hosts, host_json)},
          {"subnets", json_list(d.subnets, [](const Cidr& c) { return c.str(); })},
          {"injectable", json_list(d.injectable, injectable_json)},
          {"loot", json_list(d.loot, loot_json)},
          {"tunnel", d.tunnel ? tunnel_json(*d.tunnel) : Json(nullptr)},
          {"position", d.position ? Json(*d.position) : Json(nullptr)},
          {"impacts", d.impacts}};
}

StateDelta delta_from_json(const Json& j) { return delta_at(j, "$"); }

Json to_json(const ActionOutcome& o) {
  return {{"success", o.success},
          {"summary", o.summary},
          {"t_start_us", o.t_start.count()},
          {"t_end_us", o.t_end.count()},
          {"gained", to_json(o.gained)}};
}

ActionOutcome outcome_from_json(const Json& j) { return outcome_at(j, "$"); }

Json to_json(const AttackerState& s) {
  Json footholds = Json::array();
  for (const auto& [id, f] : s.footholds) footholds.push_back(foothold_json(f));
  Json hosts = Json::array();
  for (const auto& [addr, h] : s.known_hosts) hosts.push_back(host_json(h));
  return {{"entry", s.entry},
          {"position", s.position},
          {"footholds", footholds},
          {"known_hosts", hosts},
          {"known_subnets", json_list(s.known_subnets, [](const Cidr& c) { return c.str(); })},
          {"loot", json_list(s.loot, loot_json)},
          {"tunnels", json_list(s.tunnels, tunnel_json)},
          {"sqli_confirmed", json_list(s.sqli_confirmed, injectable_json)},
          {"impacts", s.impacts}};
}

AttackerState state_from_json(const Json& j) { return state_at(j, "$"); }

namespace {

Json address_of(const AttackerState& s, const NodeId& node) {
  auto it = s.footholds.find(node);
  return it == s.footholds.end() ? Json(nullptr) : Json(it->second.address.str());
}

Json redacted_foothold(const Foothold& f, const AttackerState& s) {
  return {{"address", f.address.str()},
          {"privilege", to_string(f.privilege)},
          {"access", to_string(f.access)},
          {"via", address_of(s, f.via)},
          {"credential", credential_json(f.credential)}};
}

Json redacted_tunnel(const TunnelInfo& t) {
  return {{"server", t.server.str()}, {"address", t.address.str()}, {"routes", t.routes.str()}};
}

}  // namespace

Json redacted(const AttackerState& s) {
  Json footholds = Json::array();
  for (const auto& [id, f] : s.footholds) footholds.push_back(redacted_foothold(f, s));
  Json hosts = Json::array();
  for (const auto& [addr, h] : s.known_hosts) hosts.push_back(host_json(h));
  return {{"entry", address_of(s, s.entry)},
          {"position", address_of(s, s.position)},
          {"footholds", footholds},
          {"known_hosts", hosts},
          {"known_subnets", json_list(s.known_subnets, [](const Cidr& c) { return c.str(); })},
          {"loot", json_list(s.loot, loot_json)},
          {"tunnels", json_list(s.tunnels, redacted_tunnel)},
          {"sqli_confirmed", json_list(s.sqli_confirmed, injectable_json)},
          {"impacts", s.impacts}};
}

Json redacted(const ActionOutcome& o, const AttackerState& after) {
  const auto& d = o.gained;
  Json gained = {
      {"footholds", json_list(d.footholds, [&](const Foothold& f) { return redacted_foothold(f, after); })},
      {"hosts", json_list(d.hosts, host_json)},
      {"subnets", json_list(d.subnets, [](const Cidr& c) { return c.str(); })},
      {"injectable", json_list(d.injectable, injectable_json)},
      {"loot", json_list(d.loot, loot_json)},
      {"tunnel", d.tunnel ? redacted_tunnel(*d.tunnel) : Json(nullptr)},
      {"position", d.position ? address_of(after, *d.position) : Json(nullptr)},
      {"impacts", d.impacts}};
  return {{"success", o.success},
          {"summary", o.summary},
          {"t_start_us", o.t_start.count()},
          {"t_end_us", o.t_end.count()},
          {"gained", gained}};
}

Json to_json(const SessionRecording& r) {
  Json steps = Json::array();
  for (const auto& s : r.steps) {
    steps.push_back({{"t_us", s.t.count()}, {"action", to_json(s.action)}, {"outcome", to_json(s.outcome)}});
  }
  return {{"format", "rangesim-recording"},
          {"version", 1},
          {"session_id", r.session_id},
          {"scenario", to_json(r.scenario)},
          {"profile", r.profile ? Json(to_string(*r.profile)) : Json(nullptr)},
          {"goal_reached", r.goal_reached},
          {"steps", steps},
          {"final_state", to_json(r.final_state)}};
}

SessionRecording recording_from_json(const Json& j) {
  Fields f(j, "$");
  if (f.get<std::string>("format") != "rangesim-recording") Fields::fail(f.sub("format"), "unknown format");
  if (f.get<int>("version") != 1) Fields::fail(f.sub("version"), "unsupported version");
  SessionRecording r;
  r.session_id = f.get<std::string>("session_id");
  try {
    r.scenario = scenario_at(f.at("scenario"));
  } catch (const ParseError& e) {
    std::string msg = e.what();
    if (msg.starts_with("$")) msg = "$.scenario" + msg.substr(1);
    throw ParseError(msg);
  }
  if (!f.at("profile").is_null()) r.profile = f.parse("profile", parse_profile);
  r.goal_reached = f.get<bool>("goal_reached");
  r.steps = array_of<RecordedStep>(f, "steps", [](const Json& s, const std::string& p) {
    Fields sf(s, p);
    RecordedStep step;
    step.t = us(sf.get<std::int64_t>("t_us"));
    step.action = action_at(sf.at("action"), sf.sub("action"));
    step.outcome = outcome_at(sf.at("outcome"), sf.sub("outcome"));
    sf.done();
    return step;
  });
  r.final_state = state_at(f.at("final_state"), f.sub("final_state"));
  f.done();
  return r;
}

// Verdicts ------------------------------------------------------------------

Json to_json(const Verdict& v) {
  Json features = Json::object();
  for (const auto& [name, s] : v.features) {
    features[name] = {{"count", s.count}, {"mean", s.mean}, {"stddev", s.stddev}, {"score", s.score}};
  }
  return {{"kind", to_string(v.kind)},
          {"window_start_us", v.window_start.count()},
          {"window_end_us", v.window_end.count()},
          {"subject", v.subject.str()},
          {"subject_role", v.subject_is_source ? "source" : "destination"},
          {"score", v.score},
          {"features", features}};
}

Verdict verdict_from_json(const Json& j) {
  Fields f(j, "$");
  Verdict v;
  v.kind = f.parse("kind", parse_verdict_kind);
  v.window_start = us(f.get<std::int64_t>("window_start_us"));
  v.window_end = us(f.get<std::int64_t>("window_end_us"));
  v.subject = f.parse("subject", parse_ip);
  const auto role = f.get<std::string>("subject_role");
  if (role != "source" && role != "destination") Fields::fail(f.sub("subject_role"), "expected source or destination");
  v.subject_is_source = role == "source";
  v.score = f.get<double>("score");
  const Json& features = f.at("features");
  if (!features.is_object()) Fields::fail(f.sub("features"), "expected an object");
  for (const auto& [name, s] : features.items()) {
    Fields sf(s, f.sub("features") + "." + name);
    v.features[name] = {sf.get<std::uint64_t>("count"), sf.get<double>("mean"), sf.get<double>("stddev"),
                        sf.get<double>("score")};
    sf.done();
  }
  f.done();
  return v;
}

std::string write_verdicts(const std::vector<Verdict>& verdicts) {
  std::string out;
  for (const auto& v : verdicts) {
    out += to_json(v).dump();
    out += '\n';
  }
  return out;
}

std::vector<Verdict> read_verdicts(std::string_view text) {
  std::vector<Verdict> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    try {
      out.push_back(verdict_from_json(Json::parse(line)));
    } catch (const Json::parse_error&) {
      throw ParseError("line " + std::to_string(n) + ": malformed JSON");
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::string format_verdicts(const std::vector<Verdict>& verdicts) {
  std::ostringstream os;
  for (const auto& v : verdicts) {
    char head[160];
    std::snprintf(head, sizeof head, "[%9.3fs, %9.3fs) %-13s %s %-15s score=%.2f",
                  static_cast<double>(v.window_start.count()) / 1e6,
                  static_cast<double>(v.window_end.count()) / 1e6, std::string(to_string(v.kind)).c_str(),
                  v.subject_is_source ? "src" : "dst", v.subject.str().c_str(), v.score);
    os << head;
    for (const auto& [name, s] : v.features) os << " " << name << "=" << s.count;
    os << "\n";
  }
  return os.str();
}

// Export bundles ------------------------------------------------------------

Bundle make_bundle(const SessionRecording& recording, const Trace& trace, const DetectorConfig& detector) {
  return {{"trace.pcap", write_pcap(trace)},
          {"syslog.log", write_syslog(trace)},
          {"events.jsonl", write_events(trace)},
          {"recording.json", to_json(recording).dump(2) + "\n"},
          {"verdicts.jsonl", write_verdicts(detect_all(trace, detector))}};
}

void write_bundle(const std::filesystem::path& dir, const Bundle& bundle) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [name, contents] : bundle) {
    const auto path = dir / name;
    std::ofstream out(path, std::ios::binary);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error("cannot write " + path.string());
  }
}

}  // namespace rangesim
