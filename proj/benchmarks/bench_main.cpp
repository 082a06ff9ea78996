#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "fbqkd/coincidence.hpp"
#include "fbqkd/config.hpp"
#include "fbqkd/detection.hpp"
#include "fbqkd/phaselock.hpp"
#include "fbqkd/qstate.hpp"
#include "fbqkd/tomography.hpp"

using namespace fbqkd;

namespace {

detection::PartyStreams link_streams(double seconds) {
  const auto cfg = default_link_config();
  return detection::simulate_streams(cfg, spool_for_length(cfg, 0.0), seconds,
                                     detection::PhaseTrajectory::constant(0.0), 11);
}

void BM_GenerateStreams(benchmark::State& state) {
  const auto cfg = default_link_config();
  const auto model = detection::resolve_model(cfg, spool_for_length(cfg, 0.0));
  const double seconds = static_cast<double>(state.range(0)) / 10.0;
  std::size_t records = 0;
  for (auto _ : state) {
    detection::StreamGenerator gen(model, detection::PhaseTrajectory::constant(0.0), seconds, 3,
                                   cfg.simulation);
    gen.for_each_chunk([&](const detection::PartyStreams& c, std::int64_t) {
      records += c.alice.size() + c.bob.size();
    });
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(records));
}
BENCHMARK(BM_GenerateStreams)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_FindCoincidences(benchmark::State& state) {
  const auto s = link_streams(static_cast<double>(state.range(0)) / 10.0);
  const DelayMap map;
  for (auto _ : state) {
    auto ev = coincidence::find_coincidences(s.alice, s.bob, map);
    benchmark::DoNotOptimize(ev.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(s.alice.size() + s.bob.size()));
}
BENCHMARK(BM_FindCoincidences)->Arg(1)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_FindCoincidencesParallel(benchmark::State& state) {
  const auto s = link_streams(1.0);
  const DelayMap map;
  for (auto _ : state) {
    auto ev = coincidence::find_coincidences_parallel(s.alice, s.bob, map,
                                                      static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(ev.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(s.alice.size() + s.bob.size()));
}
BENCHMARK(BM_FindCoincidencesParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_RawHistogram(benchmark::State& state) {
  const auto s = link_streams(0.2);
  for (auto _ : state) {
    auto h = coincidence::raw_delay_histogram(s.alice, s.bob, 50, 60000);
    benchmark::DoNotOptimize(h.total());
  }
}
BENCHMARK(BM_RawHistogram)->Unit(benchmark::kMillisecond);

void BM_MleReconstruct(benchmark::State& state) {
  const auto rec = tomography::simulate_counts(qstate::noisy_state(0.9213, 0.0), 1000000, 5);
  for (auto _ : state) {
    auto r = tomography::mle_reconstruct(rec);
    benchmark::DoNotOptimize(r.log_likelihood);
  }
}
BENCHMARK(BM_MleReconstruct)->Unit(benchmark::kMillisecond);

void BM_FringeFit(benchmark::State& state) {
  const auto samples = phaselock::sweep_fringe(1.2, 24, 0.01, 9);
  for (auto _ : state) {
    auto f = phaselock::fit_theta(samples);
    benchmark::DoNotOptimize(f.theta);
  }
}
BENCHMARK(BM_FringeFit);

}  // namespace

BENCHMARK_MAIN();
