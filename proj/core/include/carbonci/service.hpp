#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "carbonci/carbon_data.hpp"
#include "carbonci/error.hpp"
#include "carbonci/scheduler.hpp"
#include "carbonci/workflow.hpp"

namespace carbonci {

struct ServiceConfig {
  StrategyConfig strategy;
  EstimatorParams estimator;
  /// When set, completed executions are appended here (trace CSV schema) and
  /// loaded back on startup, making estimates survive restarts.
  std::optional<std::filesystem::path> history_csv;
};

/// The decision engine behind a request/response boundary. All decision logic
/// stays in the scheduler library; this class only parses messages, serializes
/// decisions, and owns the mutable state (rotation counter, history store,
/// pending jobs). Handlers speak JSON so they can be tested without a socket.
class SchedulerService {
 public:
  SchedulerService(IntensityDataset dataset, ServiceConfig config);

  /// Request: {repo, workflow, arrival?, carbon_aware?, duration?, deadline?,
  /// allowed_regions?, strategy?, buffer_h?}. Durations accept "1h30m" style
  /// literals or plain seconds. Response: {job_id, region, start,
  /// estimated_duration, predicted_emissions_reu, fallback, deadline?,
  /// decision_basis: {strategy, preprocess_reason}}. Throws Error; map to a
  /// status with http_status_for.
  nlohmann::json handle_schedule(const nlohmann::json& request);

  /// Request: {job_id, actual_duration_s, measured_energy_kwh?}. Appends the
  /// execution to the history store and reports predicted vs. actual. Without
  /// a measured energy the job is billed at a constant 1 kW.
  nlohmann::json handle_complete(const nlohmann::json& request);

  nlohmann::json health() const;

  /// Swaps in a new intensity dataset; in-flight requests keep the snapshot
  /// they started with.
  void refresh_dataset(IntensityDataset dataset);

  static int http_status_for(const Error& error);

  std::uint64_t rotation_counter() const;
  std::size_t pending_count() const;
  std::size_t history_record_count() const;
  std::map<WorkflowKey, WorkflowHistory> history_snapshot() const;

 private:
  nlohmann::json schedule_locked(const nlohmann::json& request);

  mutable std::mutex mutex_;
  std::shared_ptr<const IntensityDataset> dataset_;
  ServiceConfig config_;
  RotationState rotation_;
  std::map<WorkflowKey, WorkflowHistory> histories_;

  struct PendingJob {
    WorkflowKey workflow;
    ScheduleDecision decision;
  };
  std::map<std::uint64_t, PendingJob> pending_;
  std::uint64_t next_job_id_ = 1;
};

/// HTTP front end: POST /v1/schedule, POST /v1/complete,
/// POST /admin/refresh-intensity, GET /v1/health.
class HttpFrontend {
 public:
  explicit HttpFrontend(SchedulerService& service);
  ~HttpFrontend();

  HttpFrontend(const HttpFrontend&) = delete;
  HttpFrontend& operator=(const HttpFrontend&) = delete;

  /// Serves until stop(); returns false if the port could not be bound.
  bool listen(const std::string& host, int port);

  /// Binds a free port, serves on a background thread, returns the port.
  int start_background(const std::string& host);

  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace carbonci
