#include "carbonci/workflow.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

#include "carbonci/csv.hpp"
#include "carbonci/error.hpp"

namespace carbonci {

double WorkflowHistory::mean_duration_s() const {
  if (records.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& r : records) sum += static_cast<double>(r.duration.count());
  return sum / static_cast<double>(records.size());
}

Seconds WorkflowHistory::max_duration() const {
  Seconds best{0};
  for (const auto& r : records) best = std::max(best, r.duration);
  return best;
}

std::vector<JobRequest> load_trace_csv(const std::filesystem::path& path) {
  CsvFile csv = read_csv(path);

  int c_repo = csv.column("repo");
  int c_workflow = csv.column("workflow");
  int c_start = csv.column("start");
  int c_duration = csv.column("duration_s");
  bool headerless = c_repo < 0 || c_workflow < 0 || c_start < 0 || c_duration < 0;
  if (headerless) {
    if (csv.header.size() < 4) {
      throw Error(Errc::MalformedRow, path.string() + ": expected columns repo,workflow,start,duration_s");
    }
    // No recognizable header: treat the first line as data in positional order.
    csv.rows.insert(csv.rows.begin(), csv.header);
    csv.line_numbers.insert(csv.line_numbers.begin(), 1);
    c_repo = 0;
    c_workflow = 1;
    c_start = 2;
    c_duration = 3;
  }

  std::vector<JobRequest> jobs;
  jobs.reserve(csv.rows.size());
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& row = csv.rows[i];
    auto fail = [&](const std::string& what) -> Error {
      return Error(Errc::MalformedRow,
                   path.string() + " line " + std::to_string(csv.line_numbers[i]) + ": " + what);
    };
    std::size_t need = static_cast<std::size_t>(std::max({c_repo, c_workflow, c_start, c_duration})) + 1;
    if (row.size() < need) throw fail("too few fields");

    JobRequest job;
    job.workflow.repo = row[static_cast<std::size_t>(c_repo)];
    job.workflow.workflow = row[static_cast<std::size_t>(c_workflow)];
    if (job.workflow.repo.empty() || job.workflow.workflow.empty()) {
      throw fail("empty repo or workflow field");
    }

    auto ts = try_parse_timestamp(row[static_cast<std::size_t>(c_start)]);
    if (!ts) throw fail("bad timestamp '" + row[static_cast<std::size_t>(c_start)] + "'");
    job.arrival = *ts;

    const std::string& dur_text = row[static_cast<std::size_t>(c_duration)];
    long long secs = 0;
    try {
      std::size_t used = 0;
      secs = std::stoll(dur_text, &used);
      if (used != dur_text.size()) throw std::invalid_argument(dur_text);
    } catch (const std::exception&) {
      throw fail("bad duration '" + dur_text + "'");
    }
    if (secs <= 0) {
      throw Error(Errc::NonPositiveDuration,
                  path.string() + " line " + std::to_string(csv.line_numbers[i]) + ": duration " +
                      dur_text + " must be positive");
    }
    job.true_duration = Seconds{secs};
    jobs.push_back(std::move(job));
  }

  if (jobs.empty()) throw Error(Errc::EmptyTrace, path.string() + ": no jobs");

  std::stable_sort(jobs.begin(), jobs.end(), [](const JobRequest& a, const JobRequest& b) {
    if (a.arrival != b.arrival) return a.arrival < b.arrival;
    return a.workflow < b.workflow;
  });
  return jobs;
}

void write_trace_csv(const std::vector<JobRequest>& jobs, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot open " + path.string() + " for writing");
  out << "repo,workflow,start,duration_s\n";
  for (const auto& job : jobs) {
    long long secs = job.true_duration ? job.true_duration->count() : 0;
    out << job.workflow.repo << ',' << job.workflow.workflow << ','
        << format_timestamp(job.arrival) << ',' << secs << '\n';
  }
  if (!out) throw Error(Errc::IoError, "failed writing " + path.string());
}

std::map<WorkflowKey, WorkflowHistory> build_histories(const std::vector<ExecutionRecord>& records) {
  std::map<WorkflowKey, WorkflowHistory> histories;
  for (const auto& rec : records) {
    auto& hist = histories[rec.workflow];
    if (hist.records.empty()) hist.workflow = rec.workflow;
    hist.records.push_back(rec);
  }
  for (auto& [key, hist] : histories) {
    std::stable_sort(hist.records.begin(), hist.records.end(),
                     [](const ExecutionRecord& a, const ExecutionRecord& b) { return a.start < b.start; });
  }
  return histories;
}

}  // namespace carbonci
