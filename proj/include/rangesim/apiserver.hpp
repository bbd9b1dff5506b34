// SPDX-License-Identifier: Apache-2.0
//
// Interactive sessions over HTTP. SessionManager holds the sessions and is
// usable without a network; ApiServer maps it onto endpoints. Payloads are
// the JSON forms from traceio (see docs/api.md).

#pragma once

#include <chrono>
#include <condition_variable>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "rangesim/attacker.hpp"
#include "rangesim/traceio.hpp"

namespace httplib {
class Server;
}

namespace rangesim {

/// Unknown session id.
class NotFound : public Error {
 public:
  using Error::Error;
};

/// Operation on a closed session.
class SessionClosed : public Error {
 public:
  using Error::Error;
};

struct ServerOptions {
  /// Real-time period of the background clock; zero disables it.
  std::chrono::milliseconds tick{1000};
  /// Simulated time added per real second while a session is open.
  double sim_rate = 1.0;
  /// When set, close() also writes each bundle to <export_dir>/<id>/.
  std::optional<std::filesystem::path> export_dir;
  /// Heartbeat period of the event stream.
  std::chrono::milliseconds heartbeat{5000};
};

struct EventBatch {
  std::vector<Json> events;  // each carries "cursor" and "type"
  std::size_t next_cursor = 0;
  bool closed = false;
};

struct ClosedSession {
  SessionRecording recording;
  Trace trace;
  Bundle bundle;
};

class SessionManager {
 public:
  explicit SessionManager(ServerOptions options = {});
  ~SessionManager();
  SessionManager(const SessionManager&) = delete;
  SessionManager& operator=(const SessionManager&) = delete;

  const ServerOptions& options() const { return options_; }

  /// Throws ScenarioError for invalid documents.
  std::string create(const ScenarioDoc& doc);
  /// Executes at the session clock. Returns the redacted outcome.
  Json post_action(const std::string& id, const AttackAction& action);
  Json state(const std::string& id);
  /// Advances the session clock by dt (background traffic only).
  void advance(const std::string& id, SimTime dt);
  /// Events from `cursor` on; waits up to `wait` for at least one.
  EventBatch events(const std::string& id, std::size_t cursor,
                    std::chrono::milliseconds wait = std::chrono::milliseconds(0));
  /// Idempotent; the first call freezes the session and builds its bundle.
  std::shared_ptr<const ClosedSession> close(const std::string& id);
  bool closed(const std::string& id) const;
  std::vector<std::string> ids() const;
  void close_all();

 private:
  struct Session;

  std::shared_ptr<Session> find(const std::string& id) const;
  void tick_loop(std::stop_token stop);

  ServerOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t next_id_ = 1;
  std::jthread ticker_;
};

class ApiServer {
 public:
  explicit ApiServer(SessionManager& sessions);
  ~ApiServer();

  /// Binds host:port (port 0 picks a free one) and returns the bound port.
  /// Throws Error when the address is unavailable.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void listen();
  void stop();

 private:
  void routes();

  SessionManager& sessions_;
  std::unique_ptr<httplib::Server> http_;
};

}  // namespace rangesim
