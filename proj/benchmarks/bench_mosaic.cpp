#include <benchmark/benchmark.h>

#include <memory>

#include "mosaic/reward.hpp"
#include "mosaic/session.hpp"
#include "mosaic/simulator.hpp"
#include "mosaic/uncertainty.hpp"

using namespace mosaic;

namespace {

struct Fixture {
  std::shared_ptr<const TrajectoryTruth> truth;
  std::unique_ptr<SimulatedAgent> agent;
  std::vector<CorrespondenceSet> chain;
};

Fixture raster_fixture(int n) {
  Fixture f;
  f.truth = std::make_shared<const TrajectoryTruth>(generate_raster(n));
  f.agent = std::make_unique<SimulatedAgent>(f.truth, kDefaultLandmarks, 1.0, 1);
  f.chain = initial_chain(*f.agent, n);
  return f;
}

void BM_BundleSolve(benchmark::State& state) {
  const Fixture f = raster_fixture(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    BundleSystem sys(f.truth->size());
    for (const auto& c : f.chain) sys.stage(c);
    sys.refresh();
    benchmark::DoNotOptimize(sys.theta().data());
  }
}
BENCHMARK(BM_BundleSolve)->Arg(100)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Covariance(benchmark::State& state) {
  const Fixture f = raster_fixture(static_cast<int>(state.range(0)));
  BundleSystem sys(f.truth->size());
  for (const auto& c : f.chain) sys.stage(c);
  sys.refresh();
  for (auto _ : state) {
    const auto belief = propagate_covariance(sys);
    benchmark::DoNotOptimize(belief.covariance.data());
  }
}
BENCHMARK(BM_Covariance)->Arg(100)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_SuggestNext(benchmark::State& state) {
  Fixture f = raster_fixture(static_cast<int>(state.range(0)));
  SessionConfig cfg;
  SessionState session(f.truth->size(), f.truth->domain, f.chain, std::make_unique<IdealExternalOverlap>(f.truth),
                       cfg);
  for (auto _ : state) {
    auto top = suggest_next(session);
    benchmark::DoNotOptimize(top.data());
  }
}
BENCHMARK(BM_SuggestNext)->Arg(100)->Arg(300)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
