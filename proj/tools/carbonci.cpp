// Command line front end: synthesize intensity data, replay traces under the
// scheduling strategies, inspect workflow annotations, and serve the
// scheduler over HTTP. All logic lives in the library; this file is flag
// plumbing and table printing.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "carbonci/annotation.hpp"
#include "carbonci/carbon_data.hpp"
#include "carbonci/csv.hpp"
#include "carbonci/error.hpp"
#include "carbonci/service.hpp"
#include "carbonci/simulator.hpp"
#include "carbonci/workflow.hpp"

namespace {

using namespace carbonci;

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) {
    if (!token.empty()) out.push_back(token);
  }
  return out;
}

struct SimulateArgs {
  std::string trace;
  std::string intensity;
  std::string strategies = "round_robin,location,location_time";
  std::string buffers = "1,3,6";
  long long slot_s = 300;
  long long min_duration_s = 60;
  std::string out_dir = "report";
  std::uint64_t seed = 0;
  bool perfect_forecast = false;
  std::string buffer_policy = "uniform";
  long long series_resolution_s = 0;
};

std::vector<StrategyConfig> build_strategies(const SimulateArgs& args) {
  std::vector<StrategyConfig> out;
  for (const auto& name : split_list(args.strategies)) {
    StrategyConfig base;
    base.slot = Seconds{args.slot_s};
    base.min_duration = Seconds{args.min_duration_s};
    if (name == "round_robin") {
      base.kind = StrategyKind::RoundRobin;
      out.push_back(base);
    } else if (name == "location") {
      base.kind = StrategyKind::LocationShift;
      out.push_back(base);
    } else if (name == "location_time") {
      base.kind = StrategyKind::LocationTimeShift;
      for (const auto& buffer : split_list(args.buffers)) {
        StrategyConfig lts = base;
        lts.buffer_hours = std::stod(buffer);
        lts.validate();
        out.push_back(lts);
      }
    } else {
      throw Error(Errc::InvalidConfig, "unknown strategy '" + name + "'");
    }
  }
  if (out.empty()) throw Error(Errc::InvalidConfig, "no strategies requested");
  return out;
}

void print_report_table(const EmissionsReport& report) {
  std::printf("%-22s %14s %16s %10s %20s\n", "strategy", "total_reu", "improvement_pct",
              "fallbacks", "deadline_violations");
  for (const auto& result : report.strategies) {
    std::printf("%-22s %14.2f %16.2f %10d %20d\n", result.label.c_str(),
                result.total_emissions_reu, result.improvement_vs_baseline * 100.0,
                result.fallback_count, result.deadline_violation_count);
  }
}

int cmd_simulate(const SimulateArgs& args) {
  IntensityDataset dataset = load_intensity_csv(args.intensity);
  dataset.mirror_missing_forecasts();
  if (args.perfect_forecast) dataset.force_perfect_forecast();

  SimulationConfig config;
  config.strategies = build_strategies(args);
  config.intensity = &dataset;
  config.jobs = load_trace_csv(args.trace);
  config.seed = args.seed;
  config.series_resolution = Seconds{args.series_resolution_s};
  if (args.buffer_policy == "uniform") {
    config.buffer_policy = BufferPolicy::UniformWindow;
  } else if (args.buffer_policy == "annotation") {
    config.buffer_policy = BufferPolicy::AnnotationDriven;
  } else {
    throw Error(Errc::InvalidConfig, "buffer policy must be 'uniform' or 'annotation'");
  }

  EmissionsReport report = run_simulation(config);
  print_report_table(report);

  std::filesystem::create_directories(args.out_dir);
  const std::filesystem::path out_dir(args.out_dir);
  write_summary_csv(report, out_dir / "summary.csv");
  for (const auto& result : report.strategies) {
    write_series_csv(result, out_dir / ("series_" + result.label + ".csv"));
  }
  write_long_format_csv(report, out_dir / "series_long.csv");
  std::printf("report written to %s\n", args.out_dir.c_str());
  return 0;
}

struct SynthArgs {
  std::string out;
  SynthConfig config;
  std::string start;
};

int cmd_synth(SynthArgs& args) {
  if (!args.start.empty()) args.config.start = parse_timestamp(args.start);
  IntensityDataset dataset = synthesize_dataset(args.config);
  write_intensity_csv(dataset, args.out);
  std::printf("wrote %d region(s) x %lld point(s) to %s\n", args.config.regions,
              static_cast<long long>(
                  dataset.series(dataset.regions().front(), SeriesKind::Actual).points().size()),
              args.out.c_str());
  return 0;
}

int cmd_parse_annotation(const std::string& file) {
  Annotation ann;
  if (file == "-") {
    std::ostringstream buffer;
    buffer << std::cin.rdbuf();
    ann = parse_annotation(buffer.str());
  } else {
    ann = parse_annotation_file(file);
  }

  nlohmann::json out{
      {"carbon_aware", ann.carbon_aware},
      {"duration_estimate_s", nullptr},
      {"deadline_offset_s", nullptr},
      {"allowed_regions", nullptr},
  };
  if (ann.duration_estimate) out["duration_estimate_s"] = ann.duration_estimate->count();
  if (ann.deadline_offset) out["deadline_offset_s"] = ann.deadline_offset->count();
  if (ann.allowed_regions) {
    out["allowed_regions"] = std::vector<std::string>(ann.allowed_regions->begin(),
                                                      ann.allowed_regions->end());
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

struct ServeArgs {
  std::string intensity;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string strategy = "location_time";
  double buffer_h = 3.0;
  long long slot_s = 300;
  long long min_duration_s = 60;
  std::string history_csv;
};

int cmd_serve(const ServeArgs& args) {
  ServiceConfig config;
  if (args.strategy == "round_robin") {
    config.strategy.kind = StrategyKind::RoundRobin;
  } else if (args.strategy == "location") {
    config.strategy.kind = StrategyKind::LocationShift;
  } else if (args.strategy == "location_time") {
    config.strategy.kind = StrategyKind::LocationTimeShift;
    config.strategy.buffer_hours = args.buffer_h;
  } else {
    throw Error(Errc::InvalidConfig, "unknown strategy '" + args.strategy + "'");
  }
  config.strategy.slot = Seconds{args.slot_s};
  config.strategy.min_duration = Seconds{args.min_duration_s};
  if (!args.history_csv.empty()) config.history_csv = args.history_csv;

  SchedulerService service(load_intensity_csv(args.intensity), config);
  HttpFrontend frontend(service);
  std::printf("carbonci scheduler (%s) listening on http://%s:%d\n",
              config.strategy.label().c_str(), args.host.c_str(), args.port);
  if (!frontend.listen(args.host, args.port)) {
    std::fprintf(stderr, "error: cannot bind %s:%d\n", args.host.c_str(), args.port);
    return 1;
  }
  return 0;
}

int cmd_report(const std::string& summary_path) {
  const CsvFile csv = read_csv(summary_path);
  std::printf("%-22s %14s %16s %10s %20s\n", "strategy", "total_reu", "improvement_pct",
              "fallbacks", "deadline_violations");
  for (const auto& row : csv.rows) {
    if (row.size() < 5) throw Error(Errc::MalformedRow, summary_path + ": expected 5 columns");
    std::printf("%-22s %14.2f %16.2f %10s %20s\n", row[0].c_str(), std::stod(row[1]),
                std::stod(row[2]), row[3].c_str(), row[4].c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"carbon-aware CI/CD scheduling toolkit"};
  app.require_subcommand(1);
  app.set_config("--config")->envname("CARBONCI_CONFIG");

  SimulateArgs sim;
  CLI::App* simulate = app.add_subcommand("simulate", "replay a trace under scheduling strategies");
  simulate->add_option("--trace", sim.trace, "job trace CSV (repo,workflow,start,duration_s)")
      ->required();
  simulate->add_option("--intensity", sim.intensity, "carbon intensity CSV")->required();
  simulate->add_option("--strategies", sim.strategies, "comma list: round_robin,location,location_time");
  simulate->add_option("--buffers", sim.buffers, "location_time buffer hours, comma list");
  simulate->add_option("--slot-s", sim.slot_s, "start-slot granularity in seconds");
  simulate->add_option("--min-duration-s", sim.min_duration_s, "shortest job worth shifting");
  simulate->add_option("--out-dir", sim.out_dir, "directory for report CSVs");
  simulate->add_option("--seed", sim.seed, "seed recorded in the report config");
  simulate->add_flag("--perfect-forecast", sim.perfect_forecast,
                     "replace forecasts with the actual signal");
  simulate->add_option("--buffer-policy", sim.buffer_policy, "uniform|annotation");
  simulate->add_option("--series-resolution-s", sim.series_resolution_s,
                       "output series step (default: dataset resolution)");

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic intensity dataset");
  synth_cmd->add_option("--out", synth.out, "output CSV path")->required();
  synth_cmd->add_option("--regions", synth.config.regions, "number of regions");
  long long synth_resolution = synth.config.resolution.count();
  synth_cmd->add_option("--resolution-s", synth_resolution, "signal step in seconds");
  synth_cmd->add_option("--days", synth.config.days, "span in days");
  synth_cmd->add_option("--base", synth.config.base, "offset g/kWh");
  synth_cmd->add_option("--amplitude", synth.config.amplitude, "sinusoid amplitude g/kWh");
  synth_cmd->add_option("--period-h", synth.config.period_h, "sinusoid period in hours");
  synth_cmd->add_option("--phase-step-h", synth.config.phase_step_h,
                        "per-region phase shift in hours");
  synth_cmd->add_option("--noise", synth.config.noise, "forecast noise stddev g/kWh");
  synth_cmd->add_option("--seed", synth.config.seed, "noise seed");
  synth_cmd->add_option("--start", synth.start, "first timestamp (ISO-8601 UTC)");

  std::string annotation_file;
  CLI::App* parse_cmd = app.add_subcommand("parse-annotation",
                                           "extract scheduling hints from a workflow definition");
  parse_cmd->add_option("file", annotation_file, "workflow YAML path, or - for stdin")->required();

  ServeArgs serve;
  CLI::App* serve_cmd = app.add_subcommand("serve", "run the HTTP scheduling service");
  serve_cmd->add_option("--intensity", serve.intensity, "carbon intensity CSV")->required();
  serve_cmd->add_option("--host", serve.host, "bind address");
  serve_cmd->add_option("--port", serve.port, "bind port");
  serve_cmd->add_option("--strategy", serve.strategy, "round_robin|location|location_time");
  serve_cmd->add_option("--buffer-h", serve.buffer_h, "location_time window in hours");
  serve_cmd->add_option("--slot-s", serve.slot_s, "start-slot granularity in seconds");
  serve_cmd->add_option("--min-duration-s", serve.min_duration_s, "shortest job worth shifting");
  serve_cmd->add_option("--history-csv", serve.history_csv, "persisted execution history");

  std::string summary_path = "report/summary.csv";
  CLI::App* report_cmd = app.add_subcommand("report", "pretty-print a simulation summary CSV");
  report_cmd->add_option("--summary", summary_path, "summary CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (simulate->parsed()) return cmd_simulate(sim);
    if (synth_cmd->parsed()) {
      synth.config.resolution = carbonci::Seconds{synth_resolution};
      return cmd_synth(synth);
    }
    if (parse_cmd->parsed()) return cmd_parse_annotation(annotation_file);
    if (serve_cmd->parsed()) return cmd_serve(serve);
    if (report_cmd->parsed()) return cmd_report(summary_path);
  } catch (const carbonci::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
