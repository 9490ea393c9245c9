#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "carbonci/carbon_data.hpp"
#include "carbonci/config.hpp"
#include "carbonci/estimator.hpp"
#include "carbonci/workflow.hpp"

namespace carbonci {

enum class StrategyKind { RoundRobin, LocationShift, LocationTimeShift };
const char* strategy_kind_name(StrategyKind k);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::RoundRobin;
  double buffer_hours = 0.0;  // LocationTimeShift window size
  Seconds slot{300};          // candidate-start granularity
  Seconds min_duration{60};   // below this a job is not worth shifting

  /// Reads keys strategy (round_robin | location | location_time), buffer_h,
  /// slot_s, min_duration_s.
  static StrategyConfig from_config(const KeyValueConfig& cfg);
  void validate() const;

  /// Stable identifier used in reports: "round_robin", "location",
  /// "location_time_3h".
  std::string label() const;
};

enum class PreprocessReason { Eligible, NotCarbonAware, Unknown, TooShort, NoFlexibility };
const char* preprocess_reason_name(PreprocessReason r);

struct PreprocessOutcome {
  bool eligible = false;
  PreprocessReason reason = PreprocessReason::Unknown;
};

/// Round-robin rotation cursor. Advances exactly once per decide() call no
/// matter which strategy runs, so replays of the same trace under different
/// strategies hand identical rotation slots to the jobs that fall back.
struct RotationState {
  std::uint64_t counter = 0;
};

struct ScheduleDecision {
  WorkflowKey workflow;
  TimePoint arrival{};
  RegionId region;
  TimePoint start{};
  Seconds estimated_duration{0};  // 0 when no estimate existed
  std::optional<TimePoint> deadline;
  double predicted_emissions_reu = 0.0;  // forecast integral over the estimate window
  bool fallback = false;
  std::string strategy;
  PreprocessReason preprocess_reason = PreprocessReason::Eligible;
};

/// Everything a decision needs besides the job itself. `rotation` must be
/// non-null; histories may be null when no execution history exists. The two
/// override fields let a caller (the simulator, mainly) substitute a known
/// duration and window for the estimator's output on a per-job basis.
struct DecisionContext {
  const IntensityDataset* dataset = nullptr;
  std::vector<RegionId> regions;  // rotation order
  const std::map<WorkflowKey, WorkflowHistory>* histories = nullptr;
  EstimatorParams estimator;
  RotationState* rotation = nullptr;
  std::optional<Seconds> estimate_override;
  std::optional<TimePoint> deadline_override;

  const WorkflowHistory* history_for(const WorkflowKey& key) const;
};

/// Regions the job may run in: the context's region list filtered by the
/// annotation's allowed set, order preserved. Throws NoRegions when empty.
std::vector<RegionId> allowed_regions(const ScheduleInput& job, const DecisionContext& ctx);

/// Gate applied before carbon-aware strategies. Checked in order: Unknown
/// (nothing known about the job, not even from the user), NotCarbonAware,
/// TooShort (expected duration under strategy.min_duration), NoFlexibility
/// (time shifting requested but no usable deadline). Round-robin ignores
/// this gate entirely.
PreprocessOutcome preprocess(const ScheduleInput& job, const DecisionContext& ctx,
                             const StrategyConfig& strategy);

/// Baseline: next region in rotation order, start = arrival, fallback = true.
ScheduleDecision decide_round_robin(const ScheduleInput& job, DecisionContext& ctx);

/// Runs at arrival in the region with the lowest forecast emissions over the
/// estimated duration (lowest instantaneous intensity when no estimate
/// exists). Ties go to the lexicographically smallest region id.
ScheduleDecision decide_location_shift(const ScheduleInput& job, DecisionContext& ctx);

/// Exact argmin over (region, start-slot) of the forecast emissions integral,
/// with starts arrival, arrival+slot, ... up to deadline - estimate.total.
/// Ties prefer the earliest start, then the smallest region id. Throws
/// InfeasibleDeadline when the window cannot fit the estimate.
ScheduleDecision decide_location_time_shift(const ScheduleInput& job, DecisionContext& ctx,
                                            const DurationEstimate& estimate, TimePoint deadline,
                                            Seconds slot);

/// Strategy dispatch with the preprocess gate. Ineligible jobs fall back:
/// Unknown to round-robin, everything else to the currently best region at
/// arrival. The rotation counter advances exactly once per call.
ScheduleDecision decide(const ScheduleInput& job, const StrategyConfig& strategy,
                        DecisionContext& ctx);

}  // namespace carbonci
