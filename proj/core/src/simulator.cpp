#include "carbonci/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>

#include "carbonci/error.hpp"

namespace carbonci {

const char* buffer_policy_name(BufferPolicy p) {
  return p == BufferPolicy::UniformWindow ? "uniform_window" : "annotation_driven";
}

namespace {

Seconds buffer_seconds(const StrategyConfig& strategy) {
  return Seconds{std::llround(strategy.buffer_hours * 3600.0)};
}

/// Last-resort placement when the normal decision path cannot run (window
/// outside data coverage, or an impossible user deadline): run at arrival in
/// the region with the lowest clamped forecast bill.
ScheduleDecision emergency_fallback(const ScheduleInput& job, const DecisionContext& ctx,
                                    const std::optional<Seconds>& window,
                                    const StrategyConfig& strategy) {
  std::vector<RegionId> regions = allowed_regions(job, ctx);
  std::sort(regions.begin(), regions.end());

  ScheduleDecision d;
  d.workflow = job.workflow;
  d.arrival = job.arrival;
  d.start = job.arrival;
  d.fallback = true;
  d.strategy = strategy.label();

  const Seconds key_window = window.value_or(Seconds{60});
  double best = 0.0;
  bool have_best = false;
  for (const auto& region : regions) {
    double key = ctx.dataset->integrate_emissions_clamped(region, job.arrival, key_window,
                                                          SeriesKind::Forecast);
    if (!have_best || key < best) {
      have_best = true;
      best = key;
      d.region = region;
    }
  }
  if (window) {
    d.estimated_duration = *window;
    d.predicted_emissions_reu = best;
  }
  return d;
}

struct PendingCompletion {
  TimePoint finish;
  ExecutionRecord record;
};

StrategyResult replay_strategy(const SimulationConfig& config, const StrategyConfig& strategy,
                               const std::vector<JobRequest>& jobs) {
  StrategyResult result;
  result.strategy = strategy;
  result.label = strategy.label();
  result.jobs.reserve(jobs.size());

  RotationState rotation;
  std::map<WorkflowKey, WorkflowHistory> histories;
  std::deque<PendingCompletion> pending;  // completions not yet visible as history

  const bool uniform = config.buffer_policy == BufferPolicy::UniformWindow;
  const std::vector<RegionId> region_order = config.intensity->regions();

  for (const auto& job : jobs) {
    // History only ever reflects jobs that finished before this arrival.
    while (!pending.empty() && pending.front().finish <= job.arrival) {
      auto& hist = histories[pending.front().record.workflow];
      if (hist.records.empty()) hist.workflow = pending.front().record.workflow;
      hist.records.push_back(pending.front().record);
      pending.pop_front();
    }

    ScheduleInput input = to_schedule_input(job);
    DecisionContext ctx;
    ctx.dataset = config.intensity;
    ctx.regions = region_order;
    ctx.estimator = config.estimator;
    ctx.rotation = &rotation;
    std::optional<Seconds> window;
    if (uniform) {
      input.annotation.carbon_aware = true;
      ctx.estimate_override = *job.true_duration;
      window = *job.true_duration;
      if (strategy.kind == StrategyKind::LocationTimeShift) {
        ctx.deadline_override = job.arrival + *job.true_duration + buffer_seconds(strategy);
      }
    } else {
      ctx.histories = &histories;
    }

    ExecutedJob executed;
    try {
      executed.decision = decide(input, strategy, ctx);
    } catch (const Error& e) {
      if (e.code() != Errc::OutOfCoverage && e.code() != Errc::InfeasibleDeadline) throw;
      executed.decision = emergency_fallback(input, ctx, window, strategy);
      executed.coverage_clamped = e.code() == Errc::OutOfCoverage;
    }

    executed.actual_duration = *job.true_duration;
    bool clamped = false;
    executed.actual_emissions_reu = config.intensity->integrate_emissions_clamped(
        executed.decision.region, executed.decision.start, executed.actual_duration,
        SeriesKind::Actual, &clamped);
    executed.coverage_clamped = executed.coverage_clamped || clamped;
    executed.deadline_violated =
        executed.decision.deadline.has_value() &&
        executed.decision.start + executed.actual_duration > *executed.decision.deadline;

    result.total_emissions_reu += executed.actual_emissions_reu;
    if (executed.decision.fallback) ++result.fallback_count;
    if (executed.deadline_violated) ++result.deadline_violation_count;
    if (executed.coverage_clamped) ++result.coverage_gap_count;

    if (!uniform) {
      pending.push_back({executed.decision.start + executed.actual_duration,
                         {job.workflow, executed.decision.start, executed.actual_duration}});
      std::sort(pending.begin(), pending.end(),
                [](const PendingCompletion& a, const PendingCompletion& b) {
                  return a.finish < b.finish;
                });
    }

    result.jobs.push_back(std::move(executed));
  }
  return result;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

std::vector<SeriesPoint> build_series(const std::vector<ExecutedJob>& executed,
                                      const IntensityDataset& dataset, Seconds resolution) {
  if (executed.empty()) return {};

  TimePoint min_start = TimePoint::max();
  TimePoint max_finish = TimePoint::min();
  for (const auto& job : executed) {
    min_start = std::min(min_start, job.decision.start);
    max_finish = std::max(max_finish, job.decision.start + job.actual_duration);
  }

  // Cells aligned with the dataset grid so each cell sees one held value.
  const std::int64_t res = resolution.count();
  const TimePoint origin = dataset.coverage_begin();
  const std::int64_t first_cell = floor_div((min_start - origin).count(), res);
  const std::int64_t last_cell = floor_div((max_finish - origin).count() + res - 1, res);
  const auto n_cells = static_cast<std::size_t>(last_cell - first_cell);

  // Advance over the union of output-cell boundaries and signal-hold
  // boundaries so each charged span sees a single held value.
  const std::int64_t hold = dataset.resolution().count();
  std::vector<double> cell_emissions(n_cells, 0.0);
  for (const auto& job : executed) {
    const auto& series = dataset.series(job.decision.region, SeriesKind::Actual);
    const TimePoint start = job.decision.start;
    const TimePoint finish = start + job.actual_duration;
    const TimePoint hold_origin = series.coverage_begin();
    TimePoint cursor = start;
    while (cursor < finish) {
      const std::int64_t offset = (cursor - origin).count();
      const TimePoint cell_end = origin + Seconds{(floor_div(offset, res) + 1) * res};
      const TimePoint hold_end =
          hold_origin + Seconds{(floor_div((cursor - hold_origin).count(), hold) + 1) * hold};
      const TimePoint upto = std::min({cell_end, hold_end, finish});
      const double secs = static_cast<double>((upto - cursor).count());
      const auto cell = static_cast<std::size_t>(floor_div(offset, res) - first_cell);
      cell_emissions[cell] += series.value_at_clamped(cursor) * (secs / 3600.0);
      cursor = upto;
    }
  }

  std::vector<SeriesPoint> series;
  series.reserve(n_cells + 1);
  double cumulative = 0.0;
  for (std::size_t i = 0; i <= n_cells; ++i) {
    SeriesPoint point;
    point.timestamp = origin + Seconds{(first_cell + static_cast<std::int64_t>(i)) * res};
    point.cumulative_emissions_reu = cumulative;
    point.running_jobs = running_jobs_at(executed, point.timestamp);
    series.push_back(point);
    if (i < n_cells) cumulative += cell_emissions[i];
  }
  return series;
}

}  // namespace

EmissionsReport run_simulation(const SimulationConfig& config) {
  if (config.intensity == nullptr || config.intensity->empty()) {
    throw Error(Errc::InvalidConfig, "simulation needs an intensity dataset");
  }
  if (config.strategies.empty()) {
    throw Error(Errc::InvalidConfig, "simulation needs at least one strategy");
  }
  if (config.jobs.empty()) throw Error(Errc::EmptyTrace, "no jobs to replay");
  for (const auto& job : config.jobs) {
    if (!job.true_duration || *job.true_duration <= Seconds{0}) {
      throw Error(Errc::InvalidConfig,
                  job.workflow.display() + ": replay needs a positive true duration");
    }
  }

  std::vector<JobRequest> jobs = config.jobs;
  std::stable_sort(jobs.begin(), jobs.end(), [](const JobRequest& a, const JobRequest& b) {
    if (a.arrival != b.arrival) return a.arrival < b.arrival;
    return a.workflow < b.workflow;
  });

  const Seconds series_res =
      config.series_resolution > Seconds{0} ? config.series_resolution
                                            : config.intensity->resolution();

  EmissionsReport report;
  report.strategies.reserve(config.strategies.size());
  for (const auto& strategy : config.strategies) {
    strategy.validate();
    StrategyResult result = replay_strategy(config, strategy, jobs);
    result.series = build_series(result.jobs, *config.intensity, series_res);
    report.strategies.push_back(std::move(result));
  }

  report.baseline_index = 0;
  for (std::size_t i = 0; i < report.strategies.size(); ++i) {
    if (report.strategies[i].strategy.kind == StrategyKind::RoundRobin) {
      report.baseline_index = i;
      break;
    }
  }
  const double baseline = report.strategies[report.baseline_index].total_emissions_reu;
  for (auto& result : report.strategies) {
    result.improvement_vs_baseline =
        baseline > 0.0 ? 1.0 - result.total_emissions_reu / baseline : 0.0;
  }
  return report;
}

int running_jobs_at(const std::vector<ExecutedJob>& executed, TimePoint t) {
  int count = 0;
  for (const auto& job : executed) {
    if (job.decision.start <= t && t < job.decision.start + job.actual_duration) ++count;
  }
  return count;
}

ForecastErrorSummary forecast_error_report(const std::vector<ExecutedJob>& executed) {
  ForecastErrorSummary summary;
  if (executed.empty()) return summary;
  double abs_sum = 0.0;
  double signed_sum = 0.0;
  for (const auto& job : executed) {
    const double diff = job.decision.predicted_emissions_reu - job.actual_emissions_reu;
    abs_sum += std::fabs(diff);
    signed_sum += diff;
  }
  summary.mean_absolute_error_reu = abs_sum / static_cast<double>(executed.size());
  summary.mean_signed_error_reu = signed_sum / static_cast<double>(executed.size());
  return summary;
}

namespace {

std::string format_double(double value, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, value);
  return buf;
}

}  // namespace

void write_summary_csv(const EmissionsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << "strategy,total_reu,improvement_pct,fallbacks,deadline_violations\n";
  for (const auto& result : report.strategies) {
    out << result.label << ',' << format_double(result.total_emissions_reu, "%.10g") << ','
        << format_double(result.improvement_vs_baseline * 100.0, "%.6f") << ','
        << result.fallback_count << ',' << result.deadline_violation_count << '\n';
  }
}

void write_series_csv(const StrategyResult& result, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << "timestamp,cumulative_emissions_reu,running_jobs\n";
  for (const auto& point : result.series) {
    out << format_timestamp(point.timestamp) << ','
        << format_double(point.cumulative_emissions_reu, "%.10g") << ',' << point.running_jobs
        << '\n';
  }
}

void write_long_format_csv(const EmissionsReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << "strategy,timestamp,cumulative_emissions_reu,running_jobs\n";
  for (const auto& result : report.strategies) {
    for (const auto& point : result.series) {
      out << result.label << ',' << format_timestamp(point.timestamp) << ','
          << format_double(point.cumulative_emissions_reu, "%.10g") << ',' << point.running_jobs
          << '\n';
    }
  }
}

}  // namespace carbonci
