#include "carbonci/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "carbonci/error.hpp"

namespace carbonci {

EstimatorParams EstimatorParams::from_config(const KeyValueConfig& cfg) {
  EstimatorParams p;
  p.b_max = cfg.get_double("b_max", p.b_max);
  p.b_min = cfg.get_double("b_min", p.b_min);
  p.office_start_utc = static_cast<int>(cfg.get_int("office_start_utc", p.office_start_utc));
  p.office_end_utc = static_cast<int>(cfg.get_int("office_end_utc", p.office_end_utc));
  p.dep_max_gap = Seconds{cfg.get_int("dep_max_gap_s", p.dep_max_gap.count())};
  p.dep_min_support = static_cast<int>(cfg.get_int("dep_min_support", p.dep_min_support));
  p.periodic_tolerance = Seconds{cfg.get_int("periodic_tolerance_s", p.periodic_tolerance.count())};
  p.validate();
  return p;
}

void EstimatorParams::validate() const {
  if (!(b_max > 0.0) || !(b_min >= 0.0) || b_min > b_max) {
    throw Error(Errc::InvalidConfig, "need 0 <= b_min <= b_max and b_max > 0");
  }
  if (office_start_utc < 0 || office_end_utc > 24 || office_start_utc >= office_end_utc) {
    throw Error(Errc::InvalidConfig, "office hours must satisfy 0 <= start < end <= 24");
  }
  if (dep_max_gap <= Seconds{0}) throw Error(Errc::InvalidConfig, "dep_max_gap_s must be positive");
  if (dep_min_support < 1) throw Error(Errc::InvalidConfig, "dep_min_support must be >= 1");
  if (periodic_tolerance < Seconds{0}) {
    throw Error(Errc::InvalidConfig, "periodic_tolerance_s must be >= 0");
  }
}

const char* estimate_source_name(EstimateSource s) {
  switch (s) {
    case EstimateSource::UserOnly: return "user_only";
    case EstimateSource::HistoryOnly: return "history_only";
    case EstimateSource::Blended: return "blended";
  }
  return "?";
}

double buffer_fraction(std::size_t n_history, const EstimatorParams& params) {
  double f = params.b_max / (1.0 + static_cast<double>(n_history));
  return std::clamp(f, params.b_min, params.b_max);
}

DurationEstimate estimate_duration(const Annotation& annotation, const WorkflowHistory* history,
                                   const EstimatorParams& params) {
  std::size_t n = history ? history->size() : 0;
  bool has_user = annotation.duration_estimate.has_value();
  if (!has_user && n == 0) {
    throw Error(Errc::NoEstimateAvailable, "no user estimate and no history");
  }

  double expected_s = 0.0;
  EstimateSource source;
  if (has_user && n > 0) {
    double u = static_cast<double>(annotation.duration_estimate->count());
    double m = history->mean_duration_s();
    double w = 1.0 / (1.0 + static_cast<double>(n));
    expected_s = w * u + (1.0 - w) * m;
    source = EstimateSource::Blended;
  } else if (has_user) {
    expected_s = static_cast<double>(annotation.duration_estimate->count());
    source = EstimateSource::UserOnly;
  } else {
    expected_s = history->mean_duration_s();
    source = EstimateSource::HistoryOnly;
  }

  DurationEstimate est;
  est.expected = Seconds{std::max<long long>(1, std::llround(expected_s))};
  est.buffer = Seconds{std::llround(buffer_fraction(n, params) *
                                    static_cast<double>(est.expected.count()))};
  est.total = est.expected + est.buffer;
  est.source = source;
  est.n_history = n;
  return est;
}

const char* deadline_basis_name(DeadlineBasis b) {
  switch (b) {
    case DeadlineBasis::UserProvided: return "user_provided";
    case DeadlineBasis::NightWindow: return "night_window";
    case DeadlineBasis::None: return "none";
  }
  return "?";
}

TimePoint next_office_start(TimePoint t, const EstimatorParams& params) {
  TimePoint candidate = start_of_day(t) + Seconds{params.office_start_utc * 3600};
  if (candidate <= t) candidate += kSecondsPerDay;
  return candidate;
}

namespace {

bool started_off_hours(TimePoint t, const EstimatorParams& params) {
  Seconds tod = seconds_of_day(t);
  return tod >= Seconds{params.office_end_utc * 3600} || tod < Seconds{params.office_start_utc * 3600};
}

}  // namespace

InferredDeadline infer_deadline(const ScheduleInput& job, const WorkflowHistory* history,
                                const EstimatorParams& params) {
  if (job.annotation.deadline_offset) {
    return {DeadlineBasis::UserProvided, job.arrival + *job.annotation.deadline_offset};
  }
  if (history && !history->empty()) {
    bool all_nightly = true;
    for (const auto& rec : history->records) {
      if (!started_off_hours(rec.start, params) ||
          rec.start + rec.duration > next_office_start(rec.start, params)) {
        all_nightly = false;
        break;
      }
    }
    if (all_nightly) {
      return {DeadlineBasis::NightWindow, next_office_start(job.arrival, params)};
    }
  }
  return {DeadlineBasis::None, std::nullopt};
}

std::vector<DependencyGuess> infer_dependencies(const std::map<WorkflowKey, WorkflowHistory>& histories,
                                                const EstimatorParams& params) {
  std::vector<DependencyGuess> guesses;
  for (const auto& [up_key, up] : histories) {
    // Upstream run end times, sorted for binary search.
    std::vector<TimePoint> ends;
    ends.reserve(up.records.size());
    for (const auto& rec : up.records) ends.push_back(rec.start + rec.duration);
    std::sort(ends.begin(), ends.end());

    for (const auto& [down_key, down] : histories) {
      if (down_key == up_key) continue;
      int support = 0;
      Seconds worst_gap{0};
      for (const auto& rec : down.records) {
        // Latest upstream end strictly before this downstream start.
        auto it = std::lower_bound(ends.begin(), ends.end(), rec.start);
        if (it == ends.begin()) continue;
        Seconds gap = rec.start - *std::prev(it);
        if (gap > Seconds{0} && gap <= params.dep_max_gap) {
          ++support;
          worst_gap = std::max(worst_gap, gap);
        }
      }
      if (support >= params.dep_min_support) {
        guesses.push_back({up_key, down_key, worst_gap, support});
      }
    }
  }
  return guesses;
}

const char* job_class_name(JobClass c) {
  switch (c) {
    case JobClass::Periodic: return "periodic";
    case JobClass::FlexibleWindow: return "flexible_window";
    case JobClass::Inflexible: return "inflexible";
    case JobClass::Unknown: return "unknown";
  }
  return "?";
}

namespace {

bool is_periodic(const WorkflowHistory& history, const EstimatorParams& params) {
  if (history.size() < 3) return false;
  // Anchor on each run's time-of-day in turn and count runs on distinct UTC
  // days within the circular tolerance.
  for (const auto& anchor : history.records) {
    Seconds ref = seconds_of_day(anchor.start);
    std::set<TimePoint> days;
    for (const auto& rec : history.records) {
      if (time_of_day_distance(seconds_of_day(rec.start), ref) <= params.periodic_tolerance) {
        days.insert(start_of_day(rec.start));
      }
    }
    if (days.size() >= 3) return true;
  }
  return false;
}

}  // namespace

JobClass classify_job(const ScheduleInput& job, const WorkflowHistory* history,
                      const EstimatorParams& params) {
  bool has_history = history && !history->empty();
  if (has_history && is_periodic(*history, params)) return JobClass::Periodic;
  if (!has_history && !job.annotation.duration_estimate) return JobClass::Unknown;
  InferredDeadline inferred = infer_deadline(job, history, params);
  if (inferred.basis != DeadlineBasis::None) return JobClass::FlexibleWindow;
  return JobClass::Inflexible;
}

}  // namespace carbonci
