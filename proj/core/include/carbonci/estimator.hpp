#pragma once

#include <map>
#include <optional>
#include <vector>

#include "carbonci/config.hpp"
#include "carbonci/time_util.hpp"
#include "carbonci/workflow.hpp"

namespace carbonci {

struct EstimatorParams {
  double b_max = 0.5;  // buffer fraction with no history
  double b_min = 0.1;  // buffer fraction floor
  int office_start_utc = 8;
  int office_end_utc = 18;
  Seconds dep_max_gap{300};
  int dep_min_support = 3;
  Seconds periodic_tolerance{900};

  /// Reads keys b_max, b_min, office_start_utc, office_end_utc, dep_max_gap_s,
  /// dep_min_support, periodic_tolerance_s; missing keys keep defaults.
  static EstimatorParams from_config(const KeyValueConfig& cfg);
  void validate() const;
};

enum class EstimateSource { UserOnly, HistoryOnly, Blended };
const char* estimate_source_name(EstimateSource s);

struct DurationEstimate {
  Seconds expected{0};
  Seconds buffer{0};
  Seconds total{0};  // expected + buffer
  EstimateSource source = EstimateSource::UserOnly;
  std::size_t n_history = 0;
};

/// The safety margin as a fraction of the expected duration:
/// clamp(b_max/(1+n), b_min, b_max). Shrinks as history accumulates.
double buffer_fraction(std::size_t n_history, const EstimatorParams& params);

/// Blends the user-provided estimate with the historical mean. With n past
/// runs the user value gets weight 1/(1+n); with no history it stands alone,
/// and without a user value the mean stands alone. Throws NoEstimateAvailable
/// when neither input exists.
DurationEstimate estimate_duration(const Annotation& annotation, const WorkflowHistory* history,
                                   const EstimatorParams& params);

enum class DeadlineBasis { UserProvided, NightWindow, None };
const char* deadline_basis_name(DeadlineBasis b);

struct InferredDeadline {
  DeadlineBasis basis = DeadlineBasis::None;
  std::optional<TimePoint> deadline;
};

/// Next instant strictly after `t` at which office hours begin.
TimePoint next_office_start(TimePoint t, const EstimatorParams& params);

/// An explicit annotation deadline wins. Failing that, a workflow whose every
/// past run both started outside office hours and finished before the next
/// office-hours start is assumed to only need to be done by morning; its
/// deadline is the next office-hours start after arrival. Anything else gets
/// no deadline.
InferredDeadline infer_deadline(const ScheduleInput& job, const WorkflowHistory* history,
                                const EstimatorParams& params);

struct DependencyGuess {
  WorkflowKey upstream;
  WorkflowKey downstream;
  Seconds max_gap{0};
  int support = 0;
};

/// Flags (A, B) pairs where B-runs repeatedly start shortly after A-runs end:
/// at least dep_min_support runs with a gap in (0, dep_max_gap].
std::vector<DependencyGuess> infer_dependencies(const std::map<WorkflowKey, WorkflowHistory>& histories,
                                                const EstimatorParams& params);

enum class JobClass { Periodic, FlexibleWindow, Inflexible, Unknown };
const char* job_class_name(JobClass c);

/// Periodic: >= 3 runs at the same time-of-day (within the configured
/// tolerance) on distinct days. Unknown: nothing to size the job with (no
/// history and no user duration). FlexibleWindow: a deadline exists (user or
/// night-window). Inflexible: everything else.
JobClass classify_job(const ScheduleInput& job, const WorkflowHistory* history,
                      const EstimatorParams& params);

}  // namespace carbonci
