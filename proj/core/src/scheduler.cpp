#include "carbonci/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "carbonci/error.hpp"

namespace carbonci {

const char* strategy_kind_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::RoundRobin: return "round_robin";
    case StrategyKind::LocationShift: return "location";
    case StrategyKind::LocationTimeShift: return "location_time";
  }
  return "?";
}

StrategyConfig StrategyConfig::from_config(const KeyValueConfig& cfg) {
  StrategyConfig s;
  if (cfg.has("strategy")) {
    const std::string name = cfg.get("strategy");
    if (name == "round_robin") {
      s.kind = StrategyKind::RoundRobin;
    } else if (name == "location") {
      s.kind = StrategyKind::LocationShift;
    } else if (name == "location_time") {
      s.kind = StrategyKind::LocationTimeShift;
    } else {
      throw Error(Errc::InvalidConfig, "unknown strategy '" + name + "'");
    }
  }
  s.buffer_hours = cfg.get_double("buffer_h", s.buffer_hours);
  s.slot = Seconds{cfg.get_int("slot_s", s.slot.count())};
  s.min_duration = Seconds{cfg.get_int("min_duration_s", s.min_duration.count())};
  s.validate();
  return s;
}

void StrategyConfig::validate() const {
  if (kind == StrategyKind::LocationTimeShift && !(buffer_hours > 0.0)) {
    throw Error(Errc::InvalidConfig, "location_time needs buffer_h > 0");
  }
  if (slot <= Seconds{0}) throw Error(Errc::InvalidConfig, "slot_s must be positive");
  if (min_duration < Seconds{0}) throw Error(Errc::InvalidConfig, "min_duration_s must be >= 0");
}

std::string StrategyConfig::label() const {
  if (kind != StrategyKind::LocationTimeShift) return strategy_kind_name(kind);
  char buf[64];
  std::snprintf(buf, sizeof buf, "location_time_%gh", buffer_hours);
  return buf;
}

const char* preprocess_reason_name(PreprocessReason r) {
  switch (r) {
    case PreprocessReason::Eligible: return "eligible";
    case PreprocessReason::NotCarbonAware: return "not_carbon_aware";
    case PreprocessReason::Unknown: return "unknown";
    case PreprocessReason::TooShort: return "too_short";
    case PreprocessReason::NoFlexibility: return "no_flexibility";
  }
  return "?";
}

const WorkflowHistory* DecisionContext::history_for(const WorkflowKey& key) const {
  if (!histories) return nullptr;
  auto it = histories->find(key);
  return it == histories->end() ? nullptr : &it->second;
}

std::vector<RegionId> allowed_regions(const ScheduleInput& job, const DecisionContext& ctx) {
  std::vector<RegionId> out;
  for (const auto& region : ctx.regions) {
    if (!job.annotation.allowed_regions || job.annotation.allowed_regions->count(region) > 0) {
      out.push_back(region);
    }
  }
  if (out.empty()) {
    throw Error(Errc::NoRegions, "no usable region for " + job.workflow.display());
  }
  return out;
}

namespace {

/// The caller-supplied override wins; otherwise the estimator runs. Empty
/// result means the job is a complete unknown.
std::optional<DurationEstimate> job_estimate(const ScheduleInput& job, const DecisionContext& ctx) {
  if (ctx.estimate_override) {
    DurationEstimate est;
    est.expected = *ctx.estimate_override;
    est.buffer = Seconds{0};
    est.total = est.expected;
    est.source = EstimateSource::UserOnly;
    est.n_history = 0;
    return est;
  }
  const WorkflowHistory* history = ctx.history_for(job.workflow);
  if (!job.annotation.duration_estimate && (!history || history->empty())) return std::nullopt;
  return estimate_duration(job.annotation, history, ctx.estimator);
}

struct EstablishedDeadline {
  std::optional<TimePoint> deadline;
  DeadlineBasis basis = DeadlineBasis::None;
};

EstablishedDeadline establish_deadline(const ScheduleInput& job, const DecisionContext& ctx) {
  if (ctx.deadline_override) return {*ctx.deadline_override, DeadlineBasis::UserProvided};
  InferredDeadline inferred = infer_deadline(job, ctx.history_for(job.workflow), ctx.estimator);
  return {inferred.deadline, inferred.basis};
}

/// Deadlines are only recorded on a decision when the estimate actually fits
/// before them; an unfittable guess is dropped rather than violated upfront.
void attach_deadline_if_feasible(ScheduleDecision& d, const ScheduleInput& job,
                                 const DecisionContext& ctx,
                                 const std::optional<DurationEstimate>& est) {
  EstablishedDeadline ed = establish_deadline(job, ctx);
  if (!ed.deadline) return;
  Seconds needed = est ? est->total : Seconds{0};
  if (d.start + needed <= *ed.deadline) d.deadline = *ed.deadline;
}

std::vector<RegionId> lex_sorted(std::vector<RegionId> regions) {
  std::sort(regions.begin(), regions.end());
  return regions;
}

ScheduleDecision base_decision(const ScheduleInput& job) {
  ScheduleDecision d;
  d.workflow = job.workflow;
  d.arrival = job.arrival;
  d.start = job.arrival;
  return d;
}

ScheduleDecision round_robin_with_slot(const ScheduleInput& job, const DecisionContext& ctx,
                                       std::uint64_t slot,
                                       const std::optional<DurationEstimate>& est) {
  std::vector<RegionId> regions = allowed_regions(job, ctx);
  ScheduleDecision d = base_decision(job);
  d.region = regions[slot % regions.size()];
  d.fallback = true;
  d.strategy = strategy_kind_name(StrategyKind::RoundRobin);
  if (est) {
    d.estimated_duration = est->total;
    d.predicted_emissions_reu = ctx.dataset->integrate_emissions_clamped(
        d.region, d.start, est->total, SeriesKind::Forecast);
  }
  attach_deadline_if_feasible(d, job, ctx, est);
  return d;
}

/// Shared by location shifting and the "currently best region" fallback:
/// run at arrival wherever the forecast bill for the estimate window is
/// lowest (instantaneous intensity when no window is known).
ScheduleDecision best_region_at_arrival(const ScheduleInput& job, const DecisionContext& ctx,
                                        const std::optional<DurationEstimate>& est, bool fallback) {
  std::vector<RegionId> regions = lex_sorted(allowed_regions(job, ctx));
  ScheduleDecision d = base_decision(job);
  d.fallback = fallback;
  d.strategy = strategy_kind_name(StrategyKind::LocationShift);

  double best_key = 0.0;
  bool have_best = false;
  for (const auto& region : regions) {
    double key = est ? ctx.dataset->integrate_emissions(region, job.arrival, est->total,
                                                        SeriesKind::Forecast)
                     : ctx.dataset->intensity_at(region, job.arrival, SeriesKind::Forecast);
    if (!have_best || key < best_key) {
      have_best = true;
      best_key = key;
      d.region = region;
    }
  }
  if (est) {
    d.estimated_duration = est->total;
    d.predicted_emissions_reu = best_key;
  }
  attach_deadline_if_feasible(d, job, ctx, est);
  return d;
}

ScheduleDecision location_time_shift_impl(const ScheduleInput& job, const DecisionContext& ctx,
                                          const DurationEstimate& estimate, TimePoint deadline,
                                          Seconds slot) {
  if (slot <= Seconds{0}) throw Error(Errc::InvalidConfig, "slot must be positive");
  if (deadline < job.arrival + estimate.total) {
    throw Error(Errc::InfeasibleDeadline,
                job.workflow.display() + ": window shorter than the estimated duration");
  }

  std::vector<RegionId> regions = lex_sorted(allowed_regions(job, ctx));
  ScheduleDecision d = base_decision(job);
  d.strategy = strategy_kind_name(StrategyKind::LocationTimeShift);
  d.estimated_duration = estimate.total;
  d.deadline = deadline;

  long long max_k = (deadline - job.arrival - estimate.total) / slot;
  bool have_best = false;
  double best = 0.0;
  // Start-major, region-minor scan with strict improvement keeps the earliest
  // start and then the smallest region id on ties.
  for (long long k = 0; k <= max_k; ++k) {
    TimePoint start = job.arrival + k * slot;
    for (const auto& region : regions) {
      double cost = ctx.dataset->integrate_emissions(region, start, estimate.total,
                                                     SeriesKind::Forecast);
      if (!have_best || cost < best) {
        have_best = true;
        best = cost;
        d.start = start;
        d.region = region;
      }
    }
  }
  d.predicted_emissions_reu = best;
  return d;
}

PreprocessOutcome preprocess_with_estimate(const ScheduleInput& job, const DecisionContext& ctx,
                                           const StrategyConfig& strategy,
                                           const std::optional<DurationEstimate>& est) {
  if (!est) return {false, PreprocessReason::Unknown};
  if (!job.annotation.carbon_aware) return {false, PreprocessReason::NotCarbonAware};
  if (est->expected < strategy.min_duration) return {false, PreprocessReason::TooShort};
  if (strategy.kind == StrategyKind::LocationTimeShift) {
    EstablishedDeadline ed = establish_deadline(job, ctx);
    if (!ed.deadline) return {false, PreprocessReason::NoFlexibility};
    // An inferred deadline that cannot fit the job is no flexibility at all; a
    // user-stated one that cannot fit is an error the search will raise.
    if (ed.basis == DeadlineBasis::NightWindow && *ed.deadline < job.arrival + est->total) {
      return {false, PreprocessReason::NoFlexibility};
    }
  }
  return {true, PreprocessReason::Eligible};
}

}  // namespace

PreprocessOutcome preprocess(const ScheduleInput& job, const DecisionContext& ctx,
                             const StrategyConfig& strategy) {
  return preprocess_with_estimate(job, ctx, strategy, job_estimate(job, ctx));
}

ScheduleDecision decide_round_robin(const ScheduleInput& job, DecisionContext& ctx) {
  if (!ctx.rotation) throw Error(Errc::InvalidConfig, "rotation state required");
  std::uint64_t slot = ctx.rotation->counter++;
  return round_robin_with_slot(job, ctx, slot, job_estimate(job, ctx));
}

ScheduleDecision decide_location_shift(const ScheduleInput& job, DecisionContext& ctx) {
  if (!ctx.rotation) throw Error(Errc::InvalidConfig, "rotation state required");
  std::uint64_t slot = ctx.rotation->counter++;
  auto est = job_estimate(job, ctx);
  if (!est) {
    ScheduleDecision d = round_robin_with_slot(job, ctx, slot, est);
    d.preprocess_reason = PreprocessReason::Unknown;
    return d;
  }
  return best_region_at_arrival(job, ctx, est, /*fallback=*/false);
}

ScheduleDecision decide_location_time_shift(const ScheduleInput& job, DecisionContext& ctx,
                                            const DurationEstimate& estimate, TimePoint deadline,
                                            Seconds slot) {
  if (ctx.rotation) ctx.rotation->counter++;
  return location_time_shift_impl(job, ctx, estimate, deadline, slot);
}

ScheduleDecision decide(const ScheduleInput& job, const StrategyConfig& strategy,
                        DecisionContext& ctx) {
  if (!ctx.rotation) throw Error(Errc::InvalidConfig, "rotation state required");
  if (!ctx.dataset) throw Error(Errc::InvalidConfig, "intensity dataset required");
  std::uint64_t slot = ctx.rotation->counter++;

  auto est = job_estimate(job, ctx);
  ScheduleDecision d;
  if (strategy.kind == StrategyKind::RoundRobin) {
    d = round_robin_with_slot(job, ctx, slot, est);
  } else {
    PreprocessOutcome pre = preprocess_with_estimate(job, ctx, strategy, est);
    if (!pre.eligible) {
      if (pre.reason == PreprocessReason::Unknown) {
        d = round_robin_with_slot(job, ctx, slot, est);
      } else {
        d = best_region_at_arrival(job, ctx, est, /*fallback=*/true);
      }
      d.preprocess_reason = pre.reason;
    } else if (strategy.kind == StrategyKind::LocationShift) {
      d = best_region_at_arrival(job, ctx, est, /*fallback=*/false);
    } else {
      EstablishedDeadline ed = establish_deadline(job, ctx);
      d = location_time_shift_impl(job, ctx, *est, *ed.deadline, strategy.slot);
    }
  }
  d.strategy = strategy.label();
  return d;
}

}  // namespace carbonci
