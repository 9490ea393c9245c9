#pragma once

#include <compare>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "carbonci/carbon_data.hpp"
#include "carbonci/time_util.hpp"

namespace carbonci {

/// A workflow definition is identified by repository plus workflow name; the
/// default ordering (repo, then name) is the tie-break order used throughout.
struct WorkflowKey {
  std::string repo;
  std::string workflow;

  auto operator<=>(const WorkflowKey&) const = default;
  std::string display() const { return repo + "/" + workflow; }
};

/// User-supplied scheduling hints attached to a workflow definition.
/// `allowed_regions` absent means every region is allowed.
struct Annotation {
  bool carbon_aware = false;
  std::optional<Seconds> duration_estimate;
  std::optional<Seconds> deadline_offset;  // relative to request arrival
  std::optional<std::set<RegionId>> allowed_regions;

  bool operator==(const Annotation&) const = default;
};

/// One schedulable job. `true_duration` is replay ground truth owned by the
/// simulator; decision code receives a ScheduleInput, which does not carry it.
struct JobRequest {
  WorkflowKey workflow;
  TimePoint arrival;
  Annotation annotation;
  std::optional<Seconds> true_duration;
};

/// The slice of a JobRequest the decision engine is allowed to see.
struct ScheduleInput {
  WorkflowKey workflow;
  TimePoint arrival;
  Annotation annotation;
};

inline ScheduleInput to_schedule_input(const JobRequest& job) {
  return {job.workflow, job.arrival, job.annotation};
}

struct ExecutionRecord {
  WorkflowKey workflow;
  TimePoint start;
  Seconds duration;  // > 0
};

/// Past executions of one workflow, sorted by start.
struct WorkflowHistory {
  WorkflowKey workflow;
  std::vector<ExecutionRecord> records;

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  double mean_duration_s() const;
  Seconds max_duration() const;
};

/// Loads `repo,workflow,start,duration_s` rows into requests sorted by
/// arrival, ties broken by (repo, workflow). Each row's duration becomes the
/// request's true_duration.
std::vector<JobRequest> load_trace_csv(const std::filesystem::path& path);

/// Inverse of load_trace_csv for the fields it reads; used by the history
/// store and round-trip tests.
void write_trace_csv(const std::vector<JobRequest>& jobs, const std::filesystem::path& path);

/// Groups records by workflow, each group sorted by start. Duplicates are
/// retained; histories count executions, not distinct shapes.
std::map<WorkflowKey, WorkflowHistory> build_histories(const std::vector<ExecutionRecord>& records);

}  // namespace carbonci
