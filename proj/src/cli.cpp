// SPDX-License-Identifier: Apache-2.0

#include "rangesim/cli.hpp"

#include <CLI11.hpp>
#include <pthread.h>
#include <signal.h>

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "rangesim/apiserver.hpp"
#include "rangesim/strategy.hpp"
#include "rangesim/traceio.hpp"

namespace rangesim::cli {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunArgs {
  std::string scenario;
  std::string preset = "SME";
  std::string profile;
  std::optional<std::uint64_t> seed;
  std::string out;
};

struct DetectArgs {
  std::string events;
  DetectorConfig config;
  bool json = false;
  bool evaluate = false;
};

struct PathsArgs {
  std::string preset = "SME";
  std::string profile;
};

struct ServeArgs {
  std::string bind = "127.0.0.1:8080";
  std::int64_t tick_ms = 1000;
  double sim_rate = 1.0;
  std::string out;
};

int cmd_run(const RunArgs& a, std::ostream& out) {
  ScenarioDoc doc;
  if (!a.scenario.empty()) {
    doc = parse_scenario(read_file(a.scenario));
    if (a.seed) doc.seeds = Seeds::from(*a.seed);
  } else {
    if (a.profile.empty()) throw CLI::ValidationError("--profile", "required without --scenario");
    doc = default_doc(parse_preset(a.preset), a.seed.value_or(1));
  }
  if (!a.profile.empty()) {
    doc.attacker.mode = AttackerMode::Script;
    doc.attacker.profile = parse_profile(a.profile);
    doc.attacker.actions.clear();
  }
  materialize(doc);

  const RunResult r = run_scenario(doc);
  const Bundle bundle = make_bundle(r.recording, r.trace, doc.detector);
  write_bundle(a.out, bundle);

  std::size_t ok = 0;
  for (const auto& s : r.recording.steps) ok += s.outcome.success ? 1 : 0;
  out << doc.name << ": " << r.recording.steps.size() << " actions (" << ok << " succeeded), "
      << r.trace.packets.size() << " packets, " << r.trace.syslog.size() << " syslog lines, "
      << r.trace.labels.size() << " labels\n";
  for (const auto& s : r.recording.steps) {
    out << "  " << to_string(s.action.kind) << (s.outcome.success ? " ok: " : " failed: ") << s.outcome.summary
        << "\n";
  }
  // Background-only runs have no attacker and so no goal to miss.
  const bool attacker = doc.attacker.mode != AttackerMode::Interactive;
  out << (attacker ? (r.recording.goal_reached ? "goal reached" : "goal not reached") : "background only")
      << "; wrote " << bundle.size() << " files to " << a.out << "\n";
  return !attacker || r.recording.goal_reached ? kOk : kGoalMissed;
}

int cmd_detect(DetectArgs a, std::ostream& out) {
  const Trace trace = read_events(read_file(a.events));
  const auto verdicts = detect_all(trace, a.config);
  out << (a.json ? write_verdicts(verdicts) : format_verdicts(verdicts));
  if (a.evaluate) {
    const auto ev = evaluate(verdicts, trace.labels);
    for (const auto& [kind, s] : ev.per_kind) {
      out << to_string(kind) << ": precision " << s.precision << " recall " << s.recall << " (" << s.true_positives
          << " tp, " << s.false_positives << " fp, " << s.labels_detected << "/" << s.labels << " labels)\n";
    }
    out << "overall: precision " << ev.precision << " recall " << ev.recall << "\n";
  }
  return kOk;
}

int cmd_paths(const PathsArgs& a, std::ostream& out) {
  out << describe(make_strategy(parse_profile(a.profile), parse_preset(a.preset)));
  return kOk;
}

class SignalBlock {
 public:
  explicit SignalBlock(const sigset_t& set) { pthread_sigmask(SIG_BLOCK, &set, &old_); }
  ~SignalBlock() { pthread_sigmask(SIG_SETMASK, &old_, nullptr); }
  SignalBlock(const SignalBlock&) = delete;
  SignalBlock& operator=(const SignalBlock&) = delete;

 private:
  sigset_t old_;
};

int cmd_serve(const ServeArgs& a, std::ostream& out) {
  const auto colon = a.bind.rfind(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--bind", "expected host:port");
  const std::string host = a.bind.substr(0, colon);
  int port = 0;
  try {
    port = std::stoi(a.bind.substr(colon + 1));
  } catch (const std::logic_error&) {
    throw CLI::ValidationError("--bind", "port must be a number");
  }
  if (port < 0 || port > 65535) throw CLI::ValidationError("--bind", "port out of range");

  ServerOptions options;
  options.tick = std::chrono::milliseconds(a.tick_ms);
  options.sim_rate = a.sim_rate;
  if (!a.out.empty()) options.export_dir = a.out;

  // Route SIGINT/SIGTERM to a waiter thread so shutdown runs outside a
  // signal handler. Threads started below inherit the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  SignalBlock block(signals);

  SessionManager sessions(options);
  ApiServer server(sessions);
  const int bound = server.bind(host, port);
  out << "listening on " << host << ":" << bound << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  sessions.close_all();
  out << "closed " << sessions.ids().size() << " sessions" << std::endl;
  return kOk;
}

}  // namespace

int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"rangesim: enterprise network attack-range simulator"};
  const CLI::IsMember presets({"SME", "LargeEnterprise"});
  const CLI::IsMember profiles({"Hacktivist", "PettyThief", "BlackHat"});
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Play a scenario and export its trace bundle");
  run_cmd->add_option("--scenario", run.scenario, "Scenario JSON file");
  run_cmd->add_option("--preset", run.preset, "SME or LargeEnterprise (without --scenario)")->check(presets);
  run_cmd->add_option("--profile", run.profile, "Hacktivist, PettyThief or BlackHat")->check(profiles);
  run_cmd->add_option("--seed", run.seed, "Seed for every random stream");
  run_cmd->add_option("--out", run.out, "Output directory")->required();

  DetectArgs det;
  auto* det_cmd = app.add_subcommand("detect", "Run the spike detectors over an event log");
  det_cmd->add_option("events,--events", det.events, "events.jsonl file")->required();
  det_cmd->add_option("--window", det.config.window_s, "Window width in seconds");
  det_cmd->add_option("--k", det.config.threshold_k, "z-score threshold");
  det_cmd->add_option("--baseline", det.config.baseline_windows, "Baseline windows");
  det_cmd->add_option("--min-count", det.config.min_count, "Absolute count floor");
  det_cmd->add_flag("--json", det.json, "Print verdicts as JSON lines");
  det_cmd->add_flag("--evaluate", det.evaluate, "Score verdicts against the trace labels");

  PathsArgs paths;
  auto* paths_cmd = app.add_subcommand("paths", "Print a profile's attack pathway");
  paths_cmd->add_option("--preset", paths.preset, "SME or LargeEnterprise")->check(presets);
  paths_cmd->add_option("--profile", paths.profile, "Hacktivist, PettyThief or BlackHat")
      ->required()
      ->check(profiles);

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Serve interactive sessions over HTTP");
  serve_cmd->add_option("--bind", serve.bind, "host:port to listen on");
  serve_cmd->add_option("--tick-ms", serve.tick_ms, "Background clock period in ms (0 disables)");
  serve_cmd->add_option("--sim-rate", serve.sim_rate, "Simulated seconds per real second");
  serve_cmd->add_option("--out", serve.out, "Export closed sessions under this directory");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
    if (*det_cmd) det.config.check();
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  } catch (const ContractError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run, out);
    if (*det_cmd) return cmd_detect(det, out);
    if (*paths_cmd) return cmd_paths(paths, out);
    if (*serve_cmd) return cmd_serve(serve, out);
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ScenarioError& e) {
    err << "invalid scenario: " << e.what() << "\n";
    return kInvalid;
  } catch (const ParseError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kInvalid;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}

}  // namespace rangesim::cli
