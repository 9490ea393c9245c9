#include "carbonci/service.hpp"

#include <fstream>
#include <thread>
#include <utility>

#include "carbonci/annotation.hpp"
#include "carbonci/error.hpp"
#include "carbonci/time_util.hpp"

#include <httplib.h>

namespace carbonci {

namespace {

std::string require_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw Error(Errc::UnparseableDocument, std::string("field '") + key + "' must be a non-empty string");
  }
  return it->get<std::string>();
}

/// Durations arrive either as plain seconds or as "1h30m" style literals.
std::optional<Seconds> optional_duration(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (it->is_number_integer()) {
    long long secs = it->get<long long>();
    if (secs <= 0) {
      throw Error(Errc::BadDurationLiteral, std::string("field '") + key + "' must be positive");
    }
    return Seconds{secs};
  }
  if (it->is_string()) return parse_duration_literal(it->get<std::string>());
  throw Error(Errc::BadDurationLiteral, std::string("field '") + key + "' must be seconds or a literal");
}

ScheduleInput parse_schedule_request(const nlohmann::json& request) {
  if (!request.is_object()) {
    throw Error(Errc::UnparseableDocument, "request body must be a JSON object");
  }
  ScheduleInput input;
  input.workflow.repo = require_string(request, "repo");
  input.workflow.workflow = require_string(request, "workflow");

  if (auto it = request.find("arrival"); it != request.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(Errc::UnparseableDocument, "field 'arrival' must be a timestamp");
    auto ts = try_parse_timestamp(it->get<std::string>());
    if (!ts) {
      throw Error(Errc::UnparseableDocument, "bad arrival timestamp '" + it->get<std::string>() + "'");
    }
    input.arrival = *ts;
  } else {
    input.arrival = std::chrono::time_point_cast<Seconds>(std::chrono::system_clock::now());
  }

  if (auto it = request.find("carbon_aware"); it != request.end() && !it->is_null()) {
    if (!it->is_boolean()) throw Error(Errc::UnparseableDocument, "field 'carbon_aware' must be a boolean");
    input.annotation.carbon_aware = it->get<bool>();
  }
  input.annotation.duration_estimate = optional_duration(request, "duration");
  input.annotation.deadline_offset = optional_duration(request, "deadline");

  if (auto it = request.find("allowed_regions"); it != request.end() && !it->is_null()) {
    if (!it->is_array()) {
      throw Error(Errc::UnknownRegionFormat, "field 'allowed_regions' must be a list of names");
    }
    std::set<RegionId> regions;
    for (const auto& item : *it) {
      if (!item.is_string()) {
        throw Error(Errc::UnknownRegionFormat, "allowed_regions entries must be strings");
      }
      std::string token = item.get<std::string>();
      if (token.empty() || token.find_first_of(" \t") != std::string::npos) {
        throw Error(Errc::UnknownRegionFormat, "bad region name '" + token + "'");
      }
      regions.insert(std::move(token));
    }
    input.annotation.allowed_regions = std::move(regions);
  }
  return input;
}

StrategyConfig strategy_for_request(const nlohmann::json& request, const StrategyConfig& configured) {
  auto it = request.find("strategy");
  if (it == request.end() || it->is_null()) return configured;
  if (!it->is_string()) throw Error(Errc::InvalidConfig, "field 'strategy' must be a string");

  StrategyConfig strategy = configured;
  const std::string name = it->get<std::string>();
  if (name == "round_robin") {
    strategy.kind = StrategyKind::RoundRobin;
  } else if (name == "location") {
    strategy.kind = StrategyKind::LocationShift;
  } else if (name == "location_time") {
    strategy.kind = StrategyKind::LocationTimeShift;
    if (auto b = request.find("buffer_h"); b != request.end() && b->is_number()) {
      strategy.buffer_hours = b->get<double>();
    }
    if (!(strategy.buffer_hours > 0.0)) strategy.buffer_hours = 1.0;
  } else {
    throw Error(Errc::InvalidConfig, "unknown strategy '" + name + "'");
  }
  strategy.validate();
  return strategy;
}

nlohmann::json decision_to_json(const ScheduleDecision& d) {
  nlohmann::json out{
      {"region", d.region},
      {"start", format_timestamp(d.start)},
      {"estimated_duration", d.estimated_duration.count()},
      {"predicted_emissions_reu", d.predicted_emissions_reu},
      {"fallback", d.fallback},
      {"decision_basis",
       {{"strategy", d.strategy}, {"preprocess_reason", preprocess_reason_name(d.preprocess_reason)}}},
  };
  if (d.deadline) out["deadline"] = format_timestamp(*d.deadline);
  return out;
}

void append_history_csv(const std::filesystem::path& path, const ExecutionRecord& record) {
  const bool fresh = !std::filesystem::exists(path);
  std::ofstream out(path, std::ios::app);
  if (!out) throw Error(Errc::IoError, "cannot append to " + path.string());
  if (fresh) out << "repo,workflow,start,duration_s\n";
  out << record.workflow.repo << ',' << record.workflow.workflow << ','
      << format_timestamp(record.start) << ',' << record.duration.count() << '\n';
}

}  // namespace

SchedulerService::SchedulerService(IntensityDataset dataset, ServiceConfig config)
    : config_(std::move(config)) {
  dataset.mirror_missing_forecasts();
  dataset.validate_complete();
  dataset_ = std::make_shared<const IntensityDataset>(std::move(dataset));
  config_.strategy.validate();
  config_.estimator.validate();

  if (config_.history_csv && std::filesystem::exists(*config_.history_csv)) {
    std::vector<ExecutionRecord> records;
    for (const auto& job : load_trace_csv(*config_.history_csv)) {
      records.push_back({job.workflow, job.arrival, *job.true_duration});
    }
    histories_ = build_histories(records);
  }
}

nlohmann::json SchedulerService::handle_schedule(const nlohmann::json& request) {
  std::lock_guard<std::mutex> lock(mutex_);
  return schedule_locked(request);
}

nlohmann::json SchedulerService::schedule_locked(const nlohmann::json& request) {
  ScheduleInput input = parse_schedule_request(request);
  StrategyConfig strategy = strategy_for_request(request, config_.strategy);

  std::shared_ptr<const IntensityDataset> snapshot = dataset_;
  DecisionContext ctx;
  ctx.dataset = snapshot.get();
  ctx.regions = snapshot->regions();
  ctx.histories = &histories_;
  ctx.estimator = config_.estimator;
  ctx.rotation = &rotation_;

  ScheduleDecision decision = decide(input, strategy, ctx);

  const std::uint64_t job_id = next_job_id_++;
  pending_.emplace(job_id, PendingJob{input.workflow, decision});

  nlohmann::json response = decision_to_json(decision);
  response["job_id"] = job_id;
  return response;
}

nlohmann::json SchedulerService::handle_complete(const nlohmann::json& request) {
  std::lock_guard<std::mutex> lock(mutex_);
  const bool has_id = request.is_object() && request.contains("job_id") &&
                      request["job_id"].is_number_integer() &&
                      (request["job_id"].is_number_unsigned() ||
                       request["job_id"].get<long long>() >= 0);
  if (!has_id) {
    throw Error(Errc::UnparseableDocument, "field 'job_id' must be a non-negative integer");
  }
  const auto job_id = request["job_id"].get<std::uint64_t>();
  auto it = pending_.find(job_id);
  if (it == pending_.end()) {
    throw Error(Errc::UnknownJob, "job " + std::to_string(job_id) + " was never scheduled");
  }

  auto duration = optional_duration(request, "actual_duration_s");
  if (!duration) throw Error(Errc::UnparseableDocument, "field 'actual_duration_s' is required");

  double power_kw = 1.0;  // the accounting convention when nothing is measured
  if (auto e = request.find("measured_energy_kwh"); e != request.end() && !e->is_null()) {
    if (!e->is_number() || e->get<double>() <= 0.0) {
      throw Error(Errc::UnparseableDocument, "field 'measured_energy_kwh' must be positive");
    }
    const double hours = static_cast<double>(duration->count()) / 3600.0;
    power_kw = e->get<double>() / hours;
  }

  PendingJob job = it->second;
  pending_.erase(it);

  std::shared_ptr<const IntensityDataset> snapshot = dataset_;
  const double integral = snapshot->integrate_emissions_clamped(
      job.decision.region, job.decision.start, *duration, SeriesKind::Actual);
  const double actual = integral * power_kw;

  ExecutionRecord record{job.workflow, job.decision.start, *duration};
  auto& hist = histories_[job.workflow];
  if (hist.records.empty()) hist.workflow = job.workflow;
  hist.records.push_back(record);
  std::stable_sort(hist.records.begin(), hist.records.end(),
                   [](const ExecutionRecord& a, const ExecutionRecord& b) { return a.start < b.start; });
  if (config_.history_csv) append_history_csv(*config_.history_csv, record);

  return nlohmann::json{
      {"job_id", job_id},
      {"predicted_emissions_reu", job.decision.predicted_emissions_reu},
      {"actual_emissions_reu", actual},
      {"delta_reu", actual - job.decision.predicted_emissions_reu},
  };
}

nlohmann::json SchedulerService::health() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::size_t records = 0;
  for (const auto& [key, hist] : histories_) records += hist.size();
  return nlohmann::json{
      {"status", "ok"},
      {"strategy", config_.strategy.label()},
      {"regions", dataset_->regions()},
      {"resolution_s", dataset_->resolution().count()},
      {"coverage_begin", format_timestamp(dataset_->coverage_begin())},
      {"coverage_end", format_timestamp(dataset_->coverage_end())},
      {"pending_jobs", pending_.size()},
      {"history_records", records},
  };
}

void SchedulerService::refresh_dataset(IntensityDataset dataset) {
  dataset.mirror_missing_forecasts();
  dataset.validate_complete();
  auto fresh = std::make_shared<const IntensityDataset>(std::move(dataset));
  std::lock_guard<std::mutex> lock(mutex_);
  dataset_ = std::move(fresh);
}

int SchedulerService::http_status_for(const Error& error) {
  switch (error.code()) {
    case Errc::InfeasibleDeadline:
      return 422;
    case Errc::OutOfCoverage:
      return 503;
    case Errc::UnknownJob:
      return 404;
    case Errc::UnparseableDocument:
    case Errc::BadDurationLiteral:
    case Errc::UnknownRegionFormat:
    case Errc::MalformedRow:
    case Errc::NonPositiveDuration:
    case Errc::InvalidConfig:
    case Errc::NoRegions:
    case Errc::UnknownRegion:
    case Errc::NoEstimateAvailable:
      return 400;
    default:
      return 500;
  }
}

std::uint64_t SchedulerService::rotation_counter() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return rotation_.counter;
}

std::size_t SchedulerService::pending_count() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return pending_.size();
}

std::size_t SchedulerService::history_record_count() const {
  std::lock_guard<std::mutex> lock(mutex_);
  std::size_t records = 0;
  for (const auto& [key, hist] : histories_) records += hist.size();
  return records;
}

std::map<WorkflowKey, WorkflowHistory> SchedulerService::history_snapshot() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return histories_;
}

struct HttpFrontend::Impl {
  SchedulerService& service;
  httplib::Server server;
  std::thread worker;

  explicit Impl(SchedulerService& s) : service(s) {
    server.Post("/v1/schedule", [this](const httplib::Request& req, httplib::Response& res) {
      run(req, res, [this](const nlohmann::json& body) { return service.handle_schedule(body); });
    });
    server.Post("/v1/complete", [this](const httplib::Request& req, httplib::Response& res) {
      run(req, res, [this](const nlohmann::json& body) { return service.handle_complete(body); });
    });
    server.Post("/admin/refresh-intensity",
                [this](const httplib::Request& req, httplib::Response& res) {
                  run(req, res, [this](const nlohmann::json& body) {
                    const std::string path = require_string(body, "path");
                    service.refresh_dataset(load_intensity_csv(path));
                    nlohmann::json out = service.health();
                    out["refreshed_from"] = path;
                    return out;
                  });
                });
    server.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(service.health().dump(), "application/json");
    });
  }

  template <typename Handler>
  void run(const httplib::Request& req, httplib::Response& res, Handler&& handler) {
    nlohmann::json body;
    if (!req.body.empty()) {
      body = nlohmann::json::parse(req.body, nullptr, /*allow_exceptions=*/false);
      if (body.is_discarded()) {
        res.status = 400;
        res.set_content(nlohmann::json{{"error", "request body is not valid JSON"}}.dump(),
                        "application/json");
        return;
      }
    }
    try {
      res.set_content(handler(body).dump(), "application/json");
    } catch (const Error& e) {
      res.status = SchedulerService::http_status_for(e);
      res.set_content(
          nlohmann::json{{"error", {{"code", errc_name(e.code())}, {"message", e.what()}}}}.dump(),
          "application/json");
    } catch (const std::exception& e) {
      res.status = 500;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    }
  }
};

HttpFrontend::HttpFrontend(SchedulerService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpFrontend::~HttpFrontend() { stop(); }

bool HttpFrontend::listen(const std::string& host, int port) {
  return impl_->server.listen(host, port);
}

int HttpFrontend::start_background(const std::string& host) {
  const int port = impl_->server.bind_to_any_port(host);
  if (port <= 0) return -1;
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return port;
}

void HttpFrontend::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace carbonci
