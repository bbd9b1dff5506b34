// SPDX-License-Identifier: Apache-2.0
//
// Parallel vs serial detector kernels on a generated trace.

#include <benchmark/benchmark.h>

#include "rangesim/detect.hpp"
#include "rangesim/strategy.hpp"

namespace {

using namespace rangesim;

const Trace& trace_for(std::int64_t employees) {
  static std::map<std::int64_t, Trace> cache;
  auto it = cache.find(employees);
  if (it != cache.end()) return it->second;
  ScenarioDoc doc = default_doc(Preset::LargeEnterprise, 7);
  doc.employees = static_cast<std::size_t>(employees);
  doc.timing.duration_s = 1800;
  doc.attacker.mode = AttackerMode::Script;
  doc.attacker.profile = Profile::BlackHat;
  return cache.emplace(employees, run_scenario(doc).trace).first->second;
}

template <auto Fn>
void BM_windows(benchmark::State& state) {
  const Trace& trace = trace_for(state.range(0));
  const DetectorConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(Fn(trace, config));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(trace.packets.size()));
}

template <auto Scan, auto Brute, auto Dump>
void BM_detectors(benchmark::State& state) {
  const DetectorConfig config;
  const auto windows = window_features_serial(trace_for(state.range(0)), config);
  for (auto _ : state) {
    benchmark::DoNotOptimize(Scan(windows, config));
    benchmark::DoNotOptimize(Brute(windows, config));
    benchmark::DoNotOptimize(Dump(windows, config));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(windows.size()));
}

}  // namespace

BENCHMARK(BM_windows<window_features>)->Name("window_features/omp")->Arg(20)->Arg(200);
BENCHMARK(BM_windows<window_features_serial>)->Name("window_features/serial")->Arg(20)->Arg(200);
BENCHMARK(BM_detectors<detect_scan, detect_bruteforce, detect_sqldump>)
    ->Name("detectors/omp")->Arg(20)->Arg(200);
BENCHMARK(BM_detectors<detect_scan_serial, detect_bruteforce_serial, detect_sqldump_serial>)
    ->Name("detectors/serial")->Arg(20)->Arg(200);

BENCHMARK_MAIN();
