// SPDX-License-Identifier: Apache-2.0

#include "rangesim/apiserver.hpp"

#include <httplib.h>

#include <set>
#include <tuple>

namespace rangesim {

struct SessionManager::Session {
  std::string id;
  DetectorConfig detector;
  std::mutex mu;
  std::condition_variable cv;
  std::unique_ptr<AttackSession> attack;
  std::vector<Json> feed;
  std::set<std::tuple<std::int64_t, int, std::uint32_t>> reported;
  SimTime verdicts_through{0};
  std::shared_ptr<const ClosedSession> closed;

  void push(Json j) {
    j["cursor"] = feed.size();
    feed.push_back(std::move(j));
  }

  // Verdicts are final once their window has fully elapsed: later actions
  // and background flows only add events at or after the current clock.
  void refresh_verdicts() {
    const SimTime now = attack->engine().now();
    if (now - verdicts_through < detector.width()) return;
    verdicts_through = now;
    for (const auto& v : detect_all(attack->trace(), detector)) {
      if (v.window_end > now) continue;
      if (!reported.emplace(v.window_start.count(), static_cast<int>(v.kind), v.subject.value()).second) continue;
      Json j = {{"type", "verdict"}};
      j.update(to_json(v));
      push(std::move(j));
    }
  }
};

SessionManager::SessionManager(ServerOptions options) : options_(std::move(options)) {
  if (options_.tick.count() > 0) {
    ticker_ = std::jthread([this](std::stop_token stop) { tick_loop(stop); });
  }
}

SessionManager::~SessionManager() {
  ticker_.request_stop();
  if (ticker_.joinable()) ticker_.join();
}

std::string SessionManager::create(const ScenarioDoc& doc) {
  Scenario scenario = materialize(doc);
  auto s = std::make_shared<Session>();
  {
    std::lock_guard lock(mu_);
    s->id = "s" + std::to_string(next_id_++);
  }
  s->detector = doc.detector;
  s->attack = std::make_unique<AttackSession>(std::move(scenario), s->id);
  auto& engine = s->attack->engine();
  const Topology& topo = engine.topology();
  Session* raw = s.get();
  engine.on_packet([raw, &topo](const PacketEvent& p) {
    if (topo.in_capture_scope(p.src) || topo.in_capture_scope(p.dst)) raw->push(to_json(p));
  });
  engine.on_syslog([raw](const SyslogEvent& e) { raw->push(to_json(e)); });

  std::lock_guard lock(mu_);
  sessions_.emplace(s->id, s);
  return s->id;
}

std::shared_ptr<SessionManager::Session> SessionManager::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFound("unknown session '" + id + "'");
  return it->second;
}

Json SessionManager::post_action(const std::string& id, const AttackAction& action) {
  auto s = find(id);
  std::unique_lock lock(s->mu);
  if (s->closed) throw SessionClosed("session '" + id + "' is closed");
  const auto outcome = s->attack->execute(action);
  Json out = redacted(outcome, s->attack->state());
  s->refresh_verdicts();
  lock.unlock();
  s->cv.notify_all();
  return out;
}

Json SessionManager::state(const std::string& id) {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  Json j = {{"session", id},
            {"status", s->closed ? "closed" : "open"},
            {"now_us", s->attack->engine().now().count()}};
  j["state"] = redacted(s->attack->state());
  return j;
}

void SessionManager::advance(const std::string& id, SimTime dt) {
  auto s = find(id);
  std::unique_lock lock(s->mu);
  if (s->closed) throw SessionClosed("session '" + id + "' is closed");
  s->attack->idle_until(s->attack->engine().now() + dt);
  s->refresh_verdicts();
  lock.unlock();
  s->cv.notify_all();
}

EventBatch SessionManager::events(const std::string& id, std::size_t cursor, std::chrono::milliseconds wait) {
  auto s = find(id);
  std::unique_lock lock(s->mu);
  s->cv.wait_for(lock, wait, [&] { return s->feed.size() > cursor || s->closed; });
  EventBatch batch;
  for (std::size_t i = cursor; i < s->feed.size(); ++i) batch.events.push_back(s->feed[i]);
  batch.next_cursor = std::max(cursor, s->feed.size());
  batch.closed = s->closed != nullptr;
  return batch;
}

std::shared_ptr<const ClosedSession> SessionManager::close(const std::string& id) {
  auto s = find(id);
  std::unique_lock lock(s->mu);
  if (!s->closed) {
    s->refresh_verdicts();
    auto c = std::make_shared<ClosedSession>();
    c->recording = s->attack->recording();
    c->trace = s->attack->trace();
    c->bundle = make_bundle(c->recording, c->trace, s->detector);
    if (options_.export_dir) write_bundle(*options_.export_dir / id, c->bundle);
    s->closed = std::move(c);
  }
  auto out = s->closed;
  lock.unlock();
  s->cv.notify_all();
  return out;
}

bool SessionManager::closed(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mu);
  return s->closed != nullptr;
}

std::vector<std::string> SessionManager::ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, s] : sessions_) out.push_back(id);
  return out;
}

void SessionManager::close_all() {
  for (const auto& id : ids()) close(id);
}

void SessionManager::tick_loop(std::stop_token stop) {
  std::mutex m;
  std::condition_variable_any cv;
  const auto dt = SimTime(static_cast<std::int64_t>(
      static_cast<double>(std::chrono::duration_cast<SimTime>(options_.tick).count()) * options_.sim_rate));
  while (!stop.stop_requested()) {
    {
      std::unique_lock lock(m);
      if (cv.wait_for(lock, stop, options_.tick, [] { return false; })) break;
    }
    if (stop.stop_requested()) break;
    for (const auto& id : ids()) {
      try {
        advance(id, dt);
      } catch (const SessionClosed&) {
      }
    }
  }
}

// HTTP ----------------------------------------------------------------------

namespace {

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <class F>
void guarded(httplib::Response& res, F&& fn) {
  try {
    fn();
  } catch (const NotFound& e) {
    reply(res, 404, {{"error", e.what()}});
  } catch (const SessionClosed& e) {
    reply(res, 409, {{"error", e.what()}});
  } catch (const ContractError& e) {
    reply(res, 422, {{"error", e.what()}});
  } catch (const ParseError& e) {
    reply(res, 400, {{"error", e.what()}});
  } catch (const ScenarioError& e) {
    reply(res, 400, {{"error", e.what()}});
  } catch (const Json::exception& e) {
    reply(res, 400, {{"error", std::string("malformed JSON: ") + e.what()}});
  } catch (const std::logic_error& e) {
    reply(res, 400, {{"error", std::string("bad request parameter: ") + e.what()}});
  } catch (const std::exception& e) {
    reply(res, 500, {{"error", e.what()}});
  }
}

std::size_t cursor_param(const httplib::Request& req) {
  if (req.has_header("Last-Event-ID")) return std::stoull(req.get_header_value("Last-Event-ID")) + 1;
  if (req.has_param("cursor")) return std::stoull(req.get_param_value("cursor"));
  return 0;
}

}  // namespace

ApiServer::ApiServer(SessionManager& sessions)
    : sessions_(sessions), http_(std::make_unique<httplib::Server>()) {
  // Plain SO_REUSEADDR; httplib's default SO_REUSEPORT would share a busy port.
  http_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  routes();
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = http_->bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!http_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void ApiServer::listen() { http_->listen_after_bind(); }

void ApiServer::stop() {
  if (http_->is_running()) http_->stop();
}

void ApiServer::routes() {
  auto& s = sessions_;
  http_->Get("/health", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"ok", true}}); });

  http_->Post("/sessions", [&s](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto id = s.create(parse_scenario(req.body));
      reply(res, 201, {{"id", id}});
    });
  });

  http_->Get("/sessions", [&s](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, {{"sessions", s.ids()}});
  });

  http_->Post(R"(/sessions/([^/]+)/actions)", [&s](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, s.post_action(req.matches[1], action_from_json(Json::parse(req.body)))); });
  });

  http_->Post(R"(/sessions/([^/]+)/advance)", [&s](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const Json body = Json::parse(req.body);
      if (!body.contains("seconds") || !body["seconds"].is_number()) {
        throw ParseError("$.seconds: expected a number");
      }
      const double secs = body["seconds"].get<double>();
      if (!(secs >= 0)) throw ParseError("$.seconds: must be non-negative");
      s.advance(req.matches[1], SimTime(static_cast<std::int64_t>(secs * 1e6)));
      reply(res, 200, s.state(req.matches[1]));
    });
  });

  http_->Get(R"(/sessions/([^/]+)/state)", [&s](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { reply(res, 200, s.state(req.matches[1])); });
  });

  http_->Get(R"(/sessions/([^/]+)/events)", [&s](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto wait = req.has_param("wait_ms")
                            ? std::chrono::milliseconds(std::stoll(req.get_param_value("wait_ms")))
                            : std::chrono::milliseconds(0);
      auto batch = s.events(req.matches[1], cursor_param(req), wait);
      reply(res, 200, {{"events", batch.events}, {"next_cursor", batch.next_cursor}, {"closed", batch.closed}});
    });
  });

  http_->Get(R"(/sessions/([^/]+)/stream)", [&s](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      auto cursor = cursor_param(req);
      s.closed(id);  // 404 before the stream starts
      const auto heartbeat = s.options().heartbeat;
      res.set_chunked_content_provider(
          "text/event-stream", [&s, id, cursor, heartbeat](std::size_t, httplib::DataSink& sink) mutable {
            if (!sink.is_writable()) return false;
            EventBatch batch;
            try {
              batch = s.events(id, cursor, heartbeat);
            } catch (const Error&) {
              return false;
            }
            if (batch.events.empty()) {
              if (batch.closed) {
                const std::string bye = "event: closed\ndata: {}\n\n";
                sink.write(bye.data(), bye.size());
                sink.done();
                return true;
              }
              const std::string beat = ": heartbeat\n\n";
              return sink.write(beat.data(), beat.size());
            }
            for (const auto& e : batch.events) {
              const std::string frame = "id: " + std::to_string(e["cursor"].get<std::size_t>()) +
                                        "\nevent: " + e["type"].get<std::string>() + "\ndata: " + e.dump() + "\n\n";
              if (!sink.write(frame.data(), frame.size())) return false;
            }
            cursor = batch.next_cursor;
            return true;
          });
    });
  });

  http_->Post(R"(/sessions/([^/]+)/close)", [&s](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const auto closed = s.close(req.matches[1]);
      Json files = Json::array();
      for (const auto& [name, contents] : closed->bundle) files.push_back(name);
      reply(res, 200, {{"session", std::string(req.matches[1])},
                       {"recording", to_json(closed->recording)},
                       {"files", files}});
    });
  });

  http_->Get(R"(/sessions/([^/]+)/bundle/([^/]+))", [&s](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string id = req.matches[1];
      const std::string name = req.matches[2];
      if (!s.closed(id)) throw SessionClosed("session '" + id + "' is still open; close it first");
      const auto closed = s.close(id);
      auto it = closed->bundle.find(name);
      if (it == closed->bundle.end()) throw NotFound("no bundle file '" + name + "'");
      const bool binary = name.ends_with(".pcap");
      res.set_content(it->second, binary ? "application/vnd.tcpdump.pcap"
                                         : (name.ends_with(".log") ? "text/plain" : "application/json"));
    });
  });
}

}  // namespace rangesim
