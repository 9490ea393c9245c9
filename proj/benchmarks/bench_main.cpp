// Microbenchmarks for the hot paths: emissions integration, the
// location+time argmin search, and a full small simulation.

#include <benchmark/benchmark.h>

#include "carbonci/carbon_data.hpp"
#include "carbonci/scheduler.hpp"
#include "carbonci/simulator.hpp"

namespace {

using namespace carbonci;

SynthConfig bench_synth(int regions, double days) {
  SynthConfig cfg;
  cfg.regions = regions;
  cfg.resolution = Seconds{300};
  cfg.days = days;
  cfg.base = 300.0;
  cfg.amplitude = 150.0;
  cfg.period_h = 24.0;
  cfg.phase_step_h = 2.0;
  cfg.seed = 11;
  return cfg;
}

void BM_Integrate(benchmark::State& state) {
  const IntensityDataset dataset = synthesize_dataset(bench_synth(1, 4.0));
  const Seconds window{state.range(0)};
  const TimePoint start = dataset.coverage_begin() + Seconds{3600};
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        dataset.integrate_emissions("r00", start, window, SeriesKind::Actual));
  }
}
BENCHMARK(BM_Integrate)->Arg(600)->Arg(3600)->Arg(6 * 3600)->Arg(24 * 3600);

void BM_LocationTimeShiftDecision(benchmark::State& state) {
  const IntensityDataset dataset = synthesize_dataset(bench_synth(static_cast<int>(state.range(0)), 2.0));
  RotationState rotation;
  DecisionContext ctx;
  ctx.dataset = &dataset;
  ctx.regions = dataset.regions();
  ctx.rotation = &rotation;

  ScheduleInput job;
  job.workflow = {"bench", "build"};
  job.arrival = dataset.coverage_begin() + Seconds{1800};
  job.annotation.carbon_aware = true;

  DurationEstimate estimate;
  estimate.expected = Seconds{3600};
  estimate.total = Seconds{3600};
  const TimePoint deadline = job.arrival + Seconds{3600 + 6 * 3600};

  for (auto _ : state) {
    benchmark::DoNotOptimize(
        decide_location_time_shift(job, ctx, estimate, deadline, Seconds{300}));
  }
}
BENCHMARK(BM_LocationTimeShiftDecision)->Arg(4)->Arg(12);

void BM_Simulation(benchmark::State& state) {
  const IntensityDataset dataset = synthesize_dataset(bench_synth(4, 2.0));

  std::vector<JobRequest> jobs;
  const TimePoint begin = dataset.coverage_begin();
  for (int i = 0; i < 100; ++i) {
    JobRequest job;
    job.workflow = {"bench", "job-" + std::to_string(i % 7)};
    job.arrival = begin + Seconds{i * 600};
    job.true_duration = Seconds{900 + (i % 5) * 600};
    jobs.push_back(job);
  }

  SimulationConfig config;
  StrategyConfig lts;
  lts.kind = StrategyKind::LocationTimeShift;
  lts.buffer_hours = 3.0;
  config.strategies = {StrategyConfig{}, lts};
  config.intensity = &dataset;
  config.jobs = jobs;

  for (auto _ : state) {
    benchmark::DoNotOptimize(run_simulation(config));
  }
}
BENCHMARK(BM_Simulation);

}  // namespace

BENCHMARK_MAIN();
