#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "carbonci/carbon_data.hpp"
#include "carbonci/scheduler.hpp"
#include "carbonci/workflow.hpp"

namespace carbonci {

/// How replayed jobs get their duration estimates and deadlines.
///
/// UniformWindow reproduces the strategy-comparison experiment: every job is
/// treated as opted in, the scheduler is handed the true duration as its
/// estimate, and time-shifting strategies get a deadline of
/// arrival + duration + buffer_hours, the same flexibility window for every
/// job. AnnotationDriven instead feeds each job's own annotation plus the
/// history accumulated during the replay through the estimator, so estimates
/// can be wrong and jobs can be filtered out.
enum class BufferPolicy { UniformWindow, AnnotationDriven };
const char* buffer_policy_name(BufferPolicy p);

struct SimulationConfig {
  std::vector<StrategyConfig> strategies;
  const IntensityDataset* intensity = nullptr;
  std::vector<JobRequest> jobs;  // will be replayed in arrival order
  BufferPolicy buffer_policy = BufferPolicy::UniformWindow;
  std::uint64_t seed = 0;  // reserved for stochastic extensions; replay itself is deterministic
  EstimatorParams estimator;
  Seconds series_resolution{0};  // 0 means "use the dataset resolution"
};

struct ExecutedJob {
  ScheduleDecision decision;
  Seconds actual_duration{0};
  double actual_emissions_reu = 0.0;
  bool deadline_violated = false;
  bool coverage_clamped = false;  // charged partly at the nearest covered intensity
};

struct SeriesPoint {
  TimePoint timestamp{};
  double cumulative_emissions_reu = 0.0;
  int running_jobs = 0;
};

struct StrategyResult {
  std::string label;
  StrategyConfig strategy;
  std::vector<ExecutedJob> jobs;
  double total_emissions_reu = 0.0;        // sum of per-job actual emissions
  double improvement_vs_baseline = 0.0;    // 1 - total/baseline_total
  int fallback_count = 0;
  int deadline_violation_count = 0;
  int coverage_gap_count = 0;
  std::vector<SeriesPoint> series;
};

struct EmissionsReport {
  std::vector<StrategyResult> strategies;
  std::size_t baseline_index = 0;
};

/// Replays the whole trace once per strategy, fully independently: each
/// strategy gets a fresh rotation counter and (under AnnotationDriven) a
/// fresh history store fed only by jobs that finished before the current
/// arrival. Jobs whose window leaves data coverage are charged at the nearest
/// covered intensity and flagged, never dropped.
EmissionsReport run_simulation(const SimulationConfig& config);

/// Jobs with start <= t < start + actual_duration.
int running_jobs_at(const std::vector<ExecutedJob>& executed, TimePoint t);

struct ForecastErrorSummary {
  double mean_absolute_error_reu = 0.0;
  double mean_signed_error_reu = 0.0;  // predicted minus actual
};

ForecastErrorSummary forecast_error_report(const std::vector<ExecutedJob>& executed);

/// `strategy,total_reu,improvement_pct,fallbacks,deadline_violations` rows.
void write_summary_csv(const EmissionsReport& report, const std::filesystem::path& path);

/// `timestamp,cumulative_emissions_reu,running_jobs` rows for one strategy.
void write_series_csv(const StrategyResult& result, const std::filesystem::path& path);

/// All strategies' series stacked with a leading strategy column.
void write_long_format_csv(const EmissionsReport& report, const std::filesystem::path& path);

}  // namespace carbonci
