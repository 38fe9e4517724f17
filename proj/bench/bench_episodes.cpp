#include <benchmark/benchmark.h>

#include <random>

#include "amc/engine.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

amc::ScenarioConfig bench_scenario() {
  amc::ScenarioConfig c;
  c.channel.rank = 2;
  c.channel.speed_kmh = 30.0;
  c.agent.buffer_capacity = 500;
  c.episode_length = 3000;
  return c;
}

std::vector<amc::EpisodeJob> bench_jobs(const amc::ScenarioConfig& c) {
  std::vector<amc::EpisodeJob> jobs;
  for (std::uint64_t seed = 1; seed <= 8; ++seed) jobs.push_back({&c, amc::AgentKind::odl, seed});
  return jobs;
}

void BM_EpisodesSerial(benchmark::State& state) {
  const auto c = bench_scenario();
  const auto jobs = bench_jobs(c);
  for (auto _ : state) benchmark::DoNotOptimize(amc::run_episodes(jobs, amc::Execution::serial));
}
BENCHMARK(BM_EpisodesSerial)->Unit(benchmark::kMillisecond)->UseRealTime();

void BM_EpisodesOpenMP(benchmark::State& state) {
#ifdef _OPENMP
  omp_set_num_threads(static_cast<int>(state.range(0)));
#endif
  const auto c = bench_scenario();
  const auto jobs = bench_jobs(c);
  for (auto _ : state) benchmark::DoNotOptimize(amc::run_episodes(jobs, amc::Execution::openmp));
}
BENCHMARK(BM_EpisodesOpenMP)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

struct KernelFixture {
  amc::McsTable table = amc::McsTable::nr_default();
  std::mt19937_64 rng{7};
  amc::MlpModel model{{8, 32, 16, 1}, amc::ActivationSpec::classifier(), rng};
  std::vector<amc::Sample> batch;
  std::vector<const amc::Sample*> ptrs;

  KernelFixture() {
    std::normal_distribution<double> n(0.0, 3.0);
    for (int i = 0; i < 64; ++i) {
      amc::Sample s;
      for (int j = 0; j < 7; ++j) s.features.push_back(n(rng));
      s.features.push_back(1 + i % 28);
      s.ack = i % 3 != 0;
      batch.push_back(s);
    }
    for (const auto& s : batch) ptrs.push_back(&s);
  }
};

void BM_LossGradBatched(benchmark::State& state) {
  KernelFixture f;
  for (auto _ : state)
    benchmark::DoNotOptimize(amc::loss_and_grad(f.model, std::span<const amc::Sample* const>(f.ptrs),
                                                amc::LossKind::logloss, f.table));
}
BENCHMARK(BM_LossGradBatched);

void BM_LossGradReference(benchmark::State& state) {
  KernelFixture f;
  for (auto _ : state)
    benchmark::DoNotOptimize(amc::reference::loss_and_grad(
        f.model, std::span<const amc::Sample* const>(f.ptrs), amc::LossKind::logloss, f.table));
}
BENCHMARK(BM_LossGradReference);

void BM_PredictAllBatched(benchmark::State& state) {
  KernelFixture f;
  std::vector<double> prefix(f.batch[0].features.begin(), f.batch[0].features.end() - 1), out(28);
  for (auto _ : state) {
    f.model.predict_all_mcs(prefix, 28, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_PredictAllBatched);

void BM_PredictAllReference(benchmark::State& state) {
  KernelFixture f;
  std::vector<double> prefix(f.batch[0].features.begin(), f.batch[0].features.end() - 1), out(28);
  for (auto _ : state) {
    amc::reference::predict_all_mcs(f.model, prefix, 28, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_PredictAllReference);

}  // namespace

BENCHMARK_MAIN();
