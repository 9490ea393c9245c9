// Acceptance gate for the scheduling engine. Each numbered check prints one
// PASS/FAIL line; the process exits nonzero if any of them fail. The checks
// are intentionally end-to-end and oracle-backed: exhaustive searches,
// per-second Riemann sums, frozen reference totals, and a live service
// compared field-for-field against direct library calls.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "carbonci/annotation.hpp"
#include "carbonci/carbon_data.hpp"
#include "carbonci/error.hpp"
#include "carbonci/estimator.hpp"
#include "carbonci/rng.hpp"
#include "carbonci/scheduler.hpp"
#include "carbonci/service.hpp"
#include "carbonci/simulator.hpp"
#include "carbonci/time_util.hpp"
#include "carbonci/workflow.hpp"

using namespace carbonci;

namespace {

struct CheckFailure {
  std::string detail;
};

void require(bool ok, const std::string& detail) {
  if (!ok) throw CheckFailure{detail};
}

std::string fmt(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

// ---------------------------------------------------------------------------
// Shared builders

StrategyConfig strategy(StrategyKind kind, double buffer_hours = 0.0) {
  StrategyConfig config;
  config.kind = kind;
  config.buffer_hours = buffer_hours;
  config.slot = Seconds{300};
  config.min_duration = Seconds{60};
  return config;
}

std::vector<StrategyConfig> comparison_strategies() {
  return {strategy(StrategyKind::RoundRobin), strategy(StrategyKind::LocationShift),
          strategy(StrategyKind::LocationTimeShift, 1.0),
          strategy(StrategyKind::LocationTimeShift, 3.0),
          strategy(StrategyKind::LocationTimeShift, 6.0)};
}

// ---------------------------------------------------------------------------
// 1. More scheduling freedom never increases total emissions. With perfect
//    forecasts and exact duration estimates, every strategy's candidate set
//    is contained in the next one's, so totals must be ordered:
//    round_robin >= location >= location_time_1h >= 3h >= 6h.

void check_dominance() {
  Rng rng(20240901);
  for (int trial = 0; trial < 100; ++trial) {
    SynthConfig synth;
    synth.regions = static_cast<int>(rng.uniform_int(2, 5));
    synth.resolution = Seconds{rng.chance(0.5) ? 300 : 900};
    synth.days = 2.0;
    synth.base = rng.uniform(100.0, 400.0);
    synth.amplitude = rng.uniform(0.0, synth.base * 0.8);
    synth.period_h = rng.uniform(6.0, 30.0);
    synth.phase_step_h = rng.uniform(0.0, 12.0);
    synth.noise = 0.0;
    synth.seed = rng.next_u64();
    IntensityDataset dataset = synthesize_dataset(synth);
    dataset.force_perfect_forecast();

    const TimePoint begin = dataset.coverage_begin();
    const long long span = (dataset.coverage_end() - begin).count();
    const long long max_duration = 5400;
    // Keep every job's largest window (6h buffer) inside coverage.
    const long long latest_arrival = span - (max_duration + 6 * 3600 + 3600);

    std::vector<JobRequest> jobs;
    const int n_jobs = static_cast<int>(rng.uniform_int(5, 20));
    for (int j = 0; j < n_jobs; ++j) {
      JobRequest job;
      job.workflow = {"acme", "wf-" + std::to_string(rng.uniform_int(0, 5))};
      job.arrival = begin + Seconds{rng.uniform_int(0, latest_arrival)};
      job.true_duration = Seconds{rng.uniform_int(60, max_duration)};
      jobs.push_back(job);
    }

    SimulationConfig config;
    config.strategies = comparison_strategies();
    config.intensity = &dataset;
    config.jobs = jobs;
    config.buffer_policy = BufferPolicy::UniformWindow;
    const EmissionsReport report = run_simulation(config);

    const auto total = [&](std::size_t i) { return report.strategies[i].total_emissions_reu; };
    for (std::size_t i = 1; i < report.strategies.size(); ++i) {
      require(total(i) <= total(i - 1),
              "trial " + std::to_string(trial) + ": " + report.strategies[i].label + " (" +
                  fmt(total(i)) + ") exceeds " + report.strategies[i - 1].label + " (" +
                  fmt(total(i - 1)) + ")");
    }
  }
}

// ---------------------------------------------------------------------------
// 2. The location+time strategy's pick equals an exhaustive scan over every
//    (region, start slot) candidate, bit for bit, including tie-breaks. The
//    reference scan walks the grid in the opposite order to prove the result
//    does not depend on iteration order.

void check_time_shift_oracle() {
  Rng rng(777);
  for (int trial = 0; trial < 1000; ++trial) {
    SynthConfig synth;
    synth.regions = static_cast<int>(rng.uniform_int(1, 4));
    synth.resolution = Seconds{300 * rng.uniform_int(1, 3)};
    synth.days = 1.0;
    synth.base = rng.uniform(50.0, 500.0);
    synth.amplitude = rng.uniform(0.0, synth.base);
    synth.period_h = rng.uniform(4.0, 28.0);
    synth.phase_step_h = rng.uniform(0.0, 9.0);
    synth.noise = rng.uniform(0.0, 50.0);  // decisions read the forecast signal
    synth.seed = rng.next_u64();
    IntensityDataset dataset = synthesize_dataset(synth);
    dataset.mirror_missing_forecasts();

    const std::vector<RegionId> regions = dataset.regions();
    const TimePoint begin = dataset.coverage_begin();
    const long long span = (dataset.coverage_end() - begin).count();

    const Seconds slot{300 * rng.uniform_int(1, 6)};
    const Seconds duration{rng.uniform_int(60, 7200)};
    const long long max_slack =
        std::min<long long>(47 * slot.count(), span - duration.count() - 1);
    const Seconds slack{rng.uniform_int(0, max_slack)};
    const long long window = duration.count() + slack.count();
    const TimePoint arrival = begin + Seconds{rng.uniform_int(0, span - window - 1)};
    const TimePoint deadline = arrival + Seconds{window};

    ScheduleInput job;
    job.workflow = {"acme", "oracle"};
    job.arrival = arrival;
    job.annotation.carbon_aware = true;

    RotationState rotation;
    DecisionContext ctx;
    ctx.dataset = &dataset;
    ctx.regions = regions;
    ctx.rotation = &rotation;
    ctx.estimate_override = duration;
    ctx.deadline_override = deadline;

    StrategyConfig lts = strategy(StrategyKind::LocationTimeShift, 1.0);
    lts.slot = slot;
    const ScheduleDecision got = decide(job, lts, ctx);

    // Exhaustive reference scan, worst order first.
    const long long n_slots = slack.count() / slot.count() + 1;
    bool have_best = false;
    double best_cost = 0.0;
    TimePoint best_start{};
    RegionId best_region;
    for (auto region = regions.rbegin(); region != regions.rend(); ++region) {
      for (long long k = n_slots - 1; k >= 0; --k) {
        const TimePoint start = arrival + Seconds{k * slot.count()};
        const double cost =
            dataset.integrate_emissions(*region, start, duration, SeriesKind::Forecast);
        const bool better =
            !have_best || cost < best_cost ||
            (cost == best_cost &&
             (start < best_start || (start == best_start && *region < best_region)));
        if (better) {
          have_best = true;
          best_cost = cost;
          best_start = start;
          best_region = *region;
        }
      }
    }

    const std::string where = "trial " + std::to_string(trial);
    require(got.region == best_region, where + ": region " + got.region + " != " + best_region);
    require(got.start == best_start,
            where + ": start " + format_timestamp(got.start) + " != " +
                format_timestamp(best_start));
    require(got.predicted_emissions_reu == best_cost,
            where + ": cost " + fmt(got.predicted_emissions_reu) + " != " + fmt(best_cost));
    require(!got.fallback, where + ": unexpected fallback");
  }
}

// ---------------------------------------------------------------------------
// 3. The piecewise emissions integral agrees with a per-second Riemann sum of
//    the held signal to within 1e-6 relative error.

void check_integral_accuracy() {
  SynthConfig synth;
  synth.regions = 3;
  synth.resolution = Seconds{300};
  synth.days = 2.0;
  synth.base = 250.0;
  synth.amplitude = 180.0;
  synth.period_h = 24.0;
  synth.phase_step_h = 5.0;
  synth.noise = 30.0;
  synth.seed = 123;
  const IntensityDataset dataset = synthesize_dataset(synth);

  Rng rng(31337);
  const std::vector<RegionId> regions = dataset.regions();
  const TimePoint begin = dataset.coverage_begin();
  const long long span = (dataset.coverage_end() - begin).count();

  for (int i = 0; i < 1000; ++i) {
    const RegionId& region = regions[static_cast<std::size_t>(rng.uniform_int(0, 2))];
    const SeriesKind kind = rng.chance(0.5) ? SeriesKind::Actual : SeriesKind::Forecast;
    const CarbonIntensitySeries& series = dataset.series(region, kind);
    const long long duration = rng.uniform_int(1, 21600);
    const TimePoint start = begin + Seconds{rng.uniform_int(0, span - duration - 1)};

    const double exact = series.integrate(start, Seconds{duration});
    double riemann = 0.0;
    for (long long t = 0; t < duration; ++t) {
      riemann += series.value_at(start + Seconds{t}) / 3600.0;
    }
    const double rel = std::abs(exact - riemann) / std::max(std::abs(riemann), 1e-12);
    require(rel <= 1e-6, "window " + std::to_string(i) + ": relative error " + fmt(rel));
  }
}

// ---------------------------------------------------------------------------
// 4. The canonical annotated workflow document yields exactly the documented
//    hints.

const char* kAnnotatedWorkflow = R"yaml(---
name: CI/CD jobs
on: [push]
jobs:
  job-a:
    runs-on: ubuntu-latest
    carbon-aware: yes
    steps:
      - name: My first step
        uses: actions/hello_world@main
        with:
          duration: 1h
          deadline: 3h
          allowed-regions: [eu-central-1]
---
)yaml";

void check_annotation() {
  const Annotation ann = parse_annotation(kAnnotatedWorkflow);
  require(ann.carbon_aware, "carbon-aware flag not picked up");
  require(ann.duration_estimate == Seconds{3600},
          "duration estimate wrong: " +
              std::to_string(ann.duration_estimate.value_or(Seconds{0}).count()));
  require(ann.deadline_offset == Seconds{10800},
          "deadline offset wrong: " +
              std::to_string(ann.deadline_offset.value_or(Seconds{0}).count()));
  require(ann.allowed_regions == std::set<RegionId>{"eu-central-1"}, "allowed regions wrong");
}

// ---------------------------------------------------------------------------
// 5 + 6. One fixed reference scenario: 12 phase-shifted regions over 4 days at
//    5-minute resolution, 500 randomly generated jobs, uniform flexibility
//    windows, perfect forecast. Totals are frozen; a logic change anywhere in
//    the decision path shows up here.

const EmissionsReport& reference_report() {
  static const EmissionsReport report = [] {
    SynthConfig synth;
    synth.regions = 12;
    synth.resolution = Seconds{300};
    synth.days = 4.0;
    synth.base = 300.0;
    synth.amplitude = 150.0;
    synth.period_h = 24.0;
    synth.phase_step_h = 2.0;
    synth.noise = 25.0;
    synth.seed = 7;
    IntensityDataset dataset = synthesize_dataset(synth);
    dataset.force_perfect_forecast();

    Rng rng(42);
    const TimePoint begin = dataset.coverage_begin();
    const long long span = (dataset.coverage_end() - begin).count();
    const long long latest_arrival = span - (7200 + 6 * 3600 + 300);

    std::vector<JobRequest> jobs;
    for (int i = 0; i < 500; ++i) {
      JobRequest job;
      job.workflow = {"acme/repo-" + std::to_string(rng.uniform_int(0, 4)),
                      "wf-" + std::to_string(rng.uniform_int(0, 4))};
      job.arrival = begin + Seconds{rng.uniform_int(0, latest_arrival)};
      job.true_duration = Seconds{rng.uniform_int(120, 7200)};
      jobs.push_back(job);
    }

    SimulationConfig config;
    config.strategies = comparison_strategies();
    config.intensity = &dataset;
    config.jobs = jobs;
    config.buffer_policy = BufferPolicy::UniformWindow;
    return run_simulation(config);
  }();
  return report;
}

struct FrozenTotal {
  const char* label;
  double total_reu;
};

// Captured from a verified run of the scenario above. The 3h and 6h totals
// coincide: with twelve regions phase-stepped 2h apart, the lower envelope of
// the signals repeats every two hours, so a 3h window already reaches every
// minimum a 6h window can.
constexpr FrozenTotal kFrozenTotals[] = {
    {"round_robin", 157031.90589493877},
    {"location", 78543.727568311428},
    {"location_time_1h", 77830.712245838004},
    {"location_time_3h", 77705.793314927985},
    {"location_time_6h", 77705.793314927985},
};

void check_reference() {
  const EmissionsReport& report = reference_report();
  require(report.strategies.size() == 5, "expected five strategies");
  require(report.baseline_index == 0, "baseline is not the rotation");

  std::string drift;
  for (std::size_t i = 0; i < 5; ++i) {
    const StrategyResult& result = report.strategies[i];
    require(result.label == kFrozenTotals[i].label,
            "label mismatch: " + result.label + " != " + kFrozenTotals[i].label);
    const double rel = std::abs(result.total_emissions_reu - kFrozenTotals[i].total_reu) /
                       std::max(kFrozenTotals[i].total_reu, 1e-12);
    if (rel > 1e-9) {
      drift += " " + result.label + "=" + fmt(result.total_emissions_reu);
    }
  }
  require(drift.empty(), "totals drifted from the frozen values:" + drift);

  require(report.strategies[1].improvement_vs_baseline > 0.0,
          "location shifting shows no improvement");
  require(report.strategies[2].improvement_vs_baseline >=
              report.strategies[1].improvement_vs_baseline,
          "1h window loses to plain location shifting");
  require(report.strategies[3].improvement_vs_baseline >=
              report.strategies[2].improvement_vs_baseline,
          "3h window loses to 1h");
  require(report.strategies[4].improvement_vs_baseline >=
              report.strategies[3].improvement_vs_baseline,
          "6h window loses to 3h");

  require(report.strategies[0].fallback_count == 500, "rotation placements are all fallbacks");
  for (std::size_t i = 1; i < 5; ++i) {
    require(report.strategies[i].fallback_count == 0,
            report.strategies[i].label + " fell back unexpectedly");
    require(report.strategies[i].coverage_gap_count == 0,
            report.strategies[i].label + " left data coverage");
  }
}

void check_deadlines_honored() {
  const EmissionsReport& report = reference_report();
  for (const StrategyResult& result : report.strategies) {
    require(result.deadline_violation_count == 0,
            result.label + ": " + std::to_string(result.deadline_violation_count) +
                " violations");
    for (const ExecutedJob& job : result.jobs) {
      require(!job.deadline_violated, result.label + ": job flagged as violated");
      if (job.decision.deadline) {
        require(job.decision.start + job.actual_duration <= *job.decision.deadline,
                result.label + ": finish past deadline for " +
                    job.decision.workflow.display());
      }
    }
  }
}

// ---------------------------------------------------------------------------
// 7. The duration estimator reproduces its worked examples exactly, and the
//    safety buffer shrinks (never grows) as history accumulates.

WorkflowHistory history_of(std::vector<long long> durations) {
  WorkflowHistory history;
  history.workflow = {"acme", "wf"};
  TimePoint t{Seconds{1665532800}};
  for (long long d : durations) {
    history.records.push_back({history.workflow, t, Seconds{d}});
    t += Seconds{3600};
  }
  return history;
}

void check_estimator() {
  const EstimatorParams params;

  Annotation user_only;
  user_only.duration_estimate = Seconds{3600};
  DurationEstimate est = estimate_duration(user_only, nullptr, params);
  require(est.expected == Seconds{3600} && est.buffer == Seconds{1800} &&
              est.total == Seconds{5400} && est.source == EstimateSource::UserOnly,
          "user-only example: got " + std::to_string(est.expected.count()) + "/" +
              std::to_string(est.buffer.count()) + "/" + std::to_string(est.total.count()));

  const WorkflowHistory two_runs = history_of({600, 1200});
  est = estimate_duration(Annotation{}, &two_runs, params);
  require(est.expected == Seconds{900} && est.buffer == Seconds{150} &&
              est.total == Seconds{1050} && est.source == EstimateSource::HistoryOnly,
          "history-only example: got " + std::to_string(est.expected.count()) + "/" +
              std::to_string(est.buffer.count()) + "/" + std::to_string(est.total.count()));

  Annotation blended;
  blended.duration_estimate = Seconds{1000};
  const WorkflowHistory one_run = history_of({2000});
  est = estimate_duration(blended, &one_run, params);
  require(est.expected == Seconds{1500} && est.buffer == Seconds{375} &&
              est.total == Seconds{1875} && est.source == EstimateSource::Blended,
          "blended example: got " + std::to_string(est.expected.count()) + "/" +
              std::to_string(est.buffer.count()) + "/" + std::to_string(est.total.count()));

  require(buffer_fraction(0, params) == 0.5, "no-history buffer fraction");
  require(buffer_fraction(1, params) == 0.25, "one-run buffer fraction");
  require(buffer_fraction(2, params) == 0.5 / 3.0, "two-run buffer fraction");
  require(buffer_fraction(9, params) == 0.1, "buffer fraction floor");
  double previous = buffer_fraction(0, params);
  for (std::size_t n = 1; n <= 50; ++n) {
    const double f = buffer_fraction(n, params);
    require(f <= previous && f >= params.b_min && f <= params.b_max,
            "buffer fraction not monotone at n=" + std::to_string(n));
    previous = f;
  }
}

// ---------------------------------------------------------------------------
// 8. The HTTP-facing service is a thin shell: for 100 randomized requests,
//    its response must match a direct library decision made from a snapshot
//    of the service's state, field for field, including thrown error codes.

void check_service_parity() {
  SynthConfig synth;
  synth.regions = 4;
  synth.resolution = Seconds{300};
  synth.days = 2.0;
  synth.base = 200.0;
  synth.amplitude = 120.0;
  synth.period_h = 24.0;
  synth.phase_step_h = 6.0;
  synth.noise = 15.0;
  synth.seed = 11;

  ServiceConfig service_config;
  service_config.strategy = strategy(StrategyKind::LocationTimeShift, 3.0);
  SchedulerService service(synthesize_dataset(synth), service_config);

  // An independent, bit-identical copy of the dataset for the direct calls.
  IntensityDataset dataset = synthesize_dataset(synth);
  dataset.mirror_missing_forecasts();
  const std::vector<RegionId> regions = dataset.regions();
  const TimePoint begin = dataset.coverage_begin();
  const long long span = (dataset.coverage_end() - begin).count();

  Rng rng(2025);
  for (int i = 0; i < 100; ++i) {
    const WorkflowKey key{"acme", "wf-" + std::to_string(rng.uniform_int(0, 7))};
    const TimePoint arrival = begin + Seconds{rng.uniform_int(0, span - 12 * 3600)};

    Annotation ann;
    ann.carbon_aware = rng.chance(0.8);
    nlohmann::json request{{"repo", key.repo},
                           {"workflow", key.workflow},
                           {"arrival", format_timestamp(arrival)},
                           {"carbon_aware", ann.carbon_aware}};
    if (rng.chance(0.7)) {
      const long long d = rng.uniform_int(60, 5400);
      ann.duration_estimate = Seconds{d};
      if (rng.chance(0.5)) {
        request["duration"] = d;
      } else {
        request["duration"] = std::to_string(d) + "s";
      }
    }
    if (rng.chance(0.6)) {
      const long long minutes = rng.uniform_int(60, 360);
      ann.deadline_offset = Seconds{minutes * 60};
      request["deadline"] = std::to_string(minutes) + "m";
    }
    if (rng.chance(0.3)) {
      std::vector<RegionId> pool = regions;
      for (std::size_t j = pool.size() - 1; j > 0; --j) {
        std::swap(pool[j], pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(j)))]);
      }
      pool.resize(static_cast<std::size_t>(rng.uniform_int(1, static_cast<std::int64_t>(pool.size()))));
      if (rng.chance(0.5)) pool.push_back("mars-1");  // unknown regions are ignored
      request["allowed_regions"] = pool;
      ann.allowed_regions = std::set<RegionId>(pool.begin(), pool.end());
    }

    // Snapshot the mutable state before the request, then reproduce the
    // decision directly against the library.
    RotationState rotation{service.rotation_counter()};
    const auto histories = service.history_snapshot();
    DecisionContext ctx;
    ctx.dataset = &dataset;
    ctx.regions = regions;
    ctx.histories = &histories;
    ctx.estimator = service_config.estimator;
    ctx.rotation = &rotation;

    const ScheduleInput input{key, arrival, ann};
    const std::string where = "request " + std::to_string(i);

    nlohmann::json response;
    try {
      response = service.handle_schedule(request);
    } catch (const Error& service_error) {
      try {
        decide(input, service_config.strategy, ctx);
        require(false, where + ": service rejected (" + service_error.what() +
                           ") what the library accepts");
      } catch (const Error& library_error) {
        require(library_error.code() == service_error.code(),
                where + ": error codes differ: " + std::string(service_error.what()) +
                    " vs " + library_error.what());
      }
      continue;
    }

    const ScheduleDecision want = decide(input, service_config.strategy, ctx);
    require(response.at("region").get<std::string>() == want.region,
            where + ": region " + response.at("region").get<std::string>() + " != " +
                want.region);
    require(parse_timestamp(response.at("start").get<std::string>()) == want.start,
            where + ": start differs");
    require(response.at("estimated_duration").get<long long>() ==
                want.estimated_duration.count(),
            where + ": estimated duration differs");
    require(response.at("predicted_emissions_reu").get<double>() ==
                want.predicted_emissions_reu,
            where + ": predicted emissions differ: " +
                fmt(response.at("predicted_emissions_reu").get<double>()) + " vs " +
                fmt(want.predicted_emissions_reu));
    require(response.at("fallback").get<bool>() == want.fallback, where + ": fallback differs");
    require(response.contains("deadline") == want.deadline.has_value(),
            where + ": deadline presence differs");
    if (want.deadline) {
      require(response.at("deadline").get<std::string>() == format_timestamp(*want.deadline),
              where + ": deadline value differs");
    }

    if (rng.chance(0.6)) {
      nlohmann::json completion{{"job_id", response.at("job_id")},
                                {"actual_duration_s", rng.uniform_int(60, 5400)}};
      service.handle_complete(completion);
    }
  }
}

// ---------------------------------------------------------------------------

struct Criterion {
  const char* name;
  std::function<void()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"more scheduling freedom never increases emissions on 100 random traces",
       check_dominance},
      {"time-shift choice equals exhaustive search on 1000 random instances",
       check_time_shift_oracle},
      {"emissions integrals match per-second Riemann sums within 1e-6",
       check_integral_accuracy},
      {"the annotated workflow document parses to the documented hints", check_annotation},
      {"the reference scenario reproduces its frozen strategy totals", check_reference},
      {"no flexibility window is violated in the reference scenario",
       check_deadlines_honored},
      {"the duration estimator reproduces its worked examples", check_estimator},
      {"service responses equal direct library decisions on 100 random requests",
       check_service_parity},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    try {
      criteria[i].run();
    } catch (const CheckFailure& f) {
      detail = f.detail;
    } catch (const std::exception& e) {
      detail = std::string("unexpected exception: ") + e.what();
    }
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - t0)
                        .count();
    if (detail.empty()) {
      std::printf("PASS  [%zu/%zu] %s (%lld ms)\n", i + 1, criteria.size(), criteria[i].name,
                  static_cast<long long>(ms));
    } else {
      ++failed;
      std::printf("FAIL  [%zu/%zu] %s: %s\n", i + 1, criteria.size(), criteria[i].name,
                  detail.c_str());
    }
  }
  if (failed != 0) std::printf("%d of %zu acceptance checks failed\n", failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
