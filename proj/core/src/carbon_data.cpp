#include "carbonci/carbon_data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "carbonci/csv.hpp"
#include "carbonci/error.hpp"
#include "carbonci/rng.hpp"

namespace carbonci {

const char* series_kind_name(SeriesKind kind) {
  return kind == SeriesKind::Actual ? "actual" : "forecast";
}

CarbonIntensitySeries::CarbonIntensitySeries(RegionId region, SeriesKind kind, Seconds resolution,
                                             std::vector<IntensityPoint> points)
    : region_(std::move(region)), kind_(kind), resolution_(resolution), points_(std::move(points)) {
  if (region_.empty()) throw Error(Errc::InvalidConfig, "empty region id");
  if (resolution_ <= Seconds{0}) {
    throw Error(Errc::InvalidConfig, "non-positive resolution for region " + region_);
  }
  if (points_.empty()) throw Error(Errc::EmptyFile, "no points for region " + region_);
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (points_[i].grams_per_kwh < 0.0) {
      throw Error(Errc::NegativeIntensity,
                  "region " + region_ + " at " + format_timestamp(points_[i].timestamp));
    }
    if (i > 0 && points_[i].timestamp - points_[i - 1].timestamp != resolution_) {
      throw Error(Errc::IrregularResolution,
                  "region " + region_ + ": gap at " + format_timestamp(points_[i].timestamp));
    }
  }
}

double CarbonIntensitySeries::value_at(TimePoint t) const {
  if (!covers(t)) {
    throw Error(Errc::OutOfCoverage,
                "region " + region_ + ": " + format_timestamp(t) + " outside [" +
                    format_timestamp(coverage_begin()) + ", " + format_timestamp(coverage_end()) +
                    ")");
  }
  const auto index =
      static_cast<std::size_t>((t - coverage_begin()).count() / resolution_.count());
  return points_[index].grams_per_kwh;
}

double CarbonIntensitySeries::value_at_clamped(TimePoint t) const {
  if (t < coverage_begin()) return points_.front().grams_per_kwh;
  if (t >= coverage_end()) return points_.back().grams_per_kwh;
  return value_at(t);
}

double CarbonIntensitySeries::integrate(TimePoint start, Seconds duration) const {
  if (duration <= Seconds{0}) {
    throw Error(Errc::ZeroOrNegativeDuration, "window of " + std::to_string(duration.count()) + " s");
  }
  const TimePoint end = start + duration;
  if (start < coverage_begin() || end > coverage_end()) {
    throw Error(Errc::OutOfCoverage,
                "region " + region_ + ": window [" + format_timestamp(start) + ", " +
                    format_timestamp(end) + ") outside coverage");
  }

  // Walk the hold intervals overlapped by [start, end). Each contributes
  // value * overlap_hours; no sampling involved.
  const std::int64_t res = resolution_.count();
  double total = 0.0;
  TimePoint cursor = start;
  auto index = static_cast<std::size_t>((start - coverage_begin()).count() / res);
  while (cursor < end) {
    const TimePoint segment_end = coverage_begin() + Seconds{(static_cast<std::int64_t>(index) + 1) * res};
    const TimePoint upto = std::min(segment_end, end);
    const double secs = static_cast<double>((upto - cursor).count());
    total += points_[index].grams_per_kwh * (secs / 3600.0);
    cursor = upto;
    ++index;
  }
  return total;
}

double CarbonIntensitySeries::integrate_clamped(TimePoint start, Seconds duration,
                                                bool* clamped) const {
  if (clamped != nullptr) *clamped = false;
  if (duration <= Seconds{0}) {
    throw Error(Errc::ZeroOrNegativeDuration, "window of " + std::to_string(duration.count()) + " s");
  }
  const TimePoint end = start + duration;
  double total = 0.0;

  // Portion before coverage is charged at the first value, portion after at
  // the last value.
  if (start < coverage_begin()) {
    const TimePoint upto = std::min(end, coverage_begin());
    total += points_.front().grams_per_kwh *
             (static_cast<double>((upto - start).count()) / 3600.0);
    if (clamped != nullptr) *clamped = true;
  }
  const TimePoint mid_start = std::max(start, coverage_begin());
  const TimePoint mid_end = std::min(end, coverage_end());
  if (mid_start < mid_end) total += integrate(mid_start, mid_end - mid_start);
  if (end > coverage_end()) {
    const TimePoint from = std::max(start, coverage_end());
    total += points_.back().grams_per_kwh *
             (static_cast<double>((end - from).count()) / 3600.0);
    if (clamped != nullptr) *clamped = true;
  }
  return total;
}

void IntensityDataset::add_series(CarbonIntensitySeries series) {
  if (!series_.empty() && series.resolution() != resolution()) {
    throw Error(Errc::IrregularResolution,
                "region " + series.region() + ": resolution " +
                    std::to_string(series.resolution().count()) + " s does not match dataset " +
                    std::to_string(resolution().count()) + " s");
  }
  const auto key = std::make_pair(series.region(), series.kind());
  if (series_.count(key) != 0) {
    throw Error(Errc::InvalidConfig, "duplicate series for region " + series.region());
  }
  series_.emplace(key, std::move(series));
}

bool IntensityDataset::has_series(const RegionId& region, SeriesKind kind) const {
  return series_.count(std::make_pair(region, kind)) != 0;
}

const CarbonIntensitySeries& IntensityDataset::series(const RegionId& region,
                                                      SeriesKind kind) const {
  const auto it = series_.find(std::make_pair(region, kind));
  if (it == series_.end()) {
    throw Error(Errc::UnknownRegion,
                "no " + std::string(series_kind_name(kind)) + " series for region " + region);
  }
  return it->second;
}

std::vector<RegionId> IntensityDataset::regions() const {
  std::vector<RegionId> out;
  for (const auto& [key, value] : series_) {
    if (out.empty() || out.back() != key.first) out.push_back(key.first);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

Seconds IntensityDataset::resolution() const {
  if (series_.empty()) throw Error(Errc::InvalidConfig, "empty dataset");
  return series_.begin()->second.resolution();
}

TimePoint IntensityDataset::coverage_begin() const {
  if (series_.empty()) throw Error(Errc::InvalidConfig, "empty dataset");
  TimePoint begin = TimePoint::min();
  for (const auto& [key, s] : series_) begin = std::max(begin, s.coverage_begin());
  return begin;
}

TimePoint IntensityDataset::coverage_end() const {
  if (series_.empty()) throw Error(Errc::InvalidConfig, "empty dataset");
  TimePoint end = TimePoint::max();
  for (const auto& [key, s] : series_) end = std::min(end, s.coverage_end());
  return end;
}

double IntensityDataset::intensity_at(const RegionId& region, TimePoint t, SeriesKind kind) const {
  return series(region, kind).value_at(t);
}

double IntensityDataset::integrate_emissions(const RegionId& region, TimePoint start,
                                             Seconds duration, SeriesKind kind) const {
  return series(region, kind).integrate(start, duration);
}

double IntensityDataset::integrate_emissions_clamped(const RegionId& region, TimePoint start,
                                                     Seconds duration, SeriesKind kind,
                                                     bool* clamped) const {
  return series(region, kind).integrate_clamped(start, duration, clamped);
}

void IntensityDataset::mirror_missing_forecasts() {
  std::vector<CarbonIntensitySeries> to_add;
  for (const auto& [key, s] : series_) {
    if (key.second != SeriesKind::Actual) continue;
    if (!has_series(key.first, SeriesKind::Forecast)) {
      to_add.emplace_back(key.first, SeriesKind::Forecast, s.resolution(), s.points());
    }
  }
  for (auto& s : to_add) add_series(std::move(s));
}

void IntensityDataset::force_perfect_forecast() {
  std::vector<CarbonIntensitySeries> replacements;
  for (const auto& [key, s] : series_) {
    if (key.second != SeriesKind::Actual) continue;
    replacements.emplace_back(key.first, SeriesKind::Forecast, s.resolution(), s.points());
  }
  for (auto& s : replacements) {
    series_.erase(std::make_pair(s.region(), SeriesKind::Forecast));
    add_series(std::move(s));
  }
}

void IntensityDataset::validate_complete() const {
  for (const auto& region : regions()) {
    if (!has_series(region, SeriesKind::Actual)) {
      throw Error(Errc::InvalidConfig, "region " + region + " lacks an actual series");
    }
    if (!has_series(region, SeriesKind::Forecast)) {
      throw Error(Errc::InvalidConfig, "region " + region + " lacks a forecast series");
    }
  }
}

namespace {

struct RawRow {
  TimePoint timestamp;
  double value;
};

SeriesKind parse_kind_token(const std::string& token, std::size_t line_no) {
  if (token == "actual") return SeriesKind::Actual;
  if (token == "forecast") return SeriesKind::Forecast;
  throw Error(Errc::MalformedRow,
              "line " + std::to_string(line_no) + ": unknown kind '" + token + "'");
}

double parse_intensity(const std::string& token, std::size_t line_no) {
  double value = 0.0;
  try {
    std::size_t pos = 0;
    value = std::stod(token, &pos);
    if (pos != token.size()) throw std::invalid_argument(token);
  } catch (const std::exception&) {
    throw Error(Errc::MalformedRow,
                "line " + std::to_string(line_no) + ": bad intensity '" + token + "'");
  }
  if (value < 0.0) {
    throw Error(Errc::NegativeIntensity,
                "line " + std::to_string(line_no) + ": intensity " + token);
  }
  return value;
}

/// Sorts, infers the resolution from the first gap and snaps <=1 s jitter
/// onto the grid; larger deviations are rejected.
CarbonIntensitySeries build_series(const RegionId& region, SeriesKind kind,
                                   std::vector<RawRow> rows) {
  std::sort(rows.begin(), rows.end(),
            [](const RawRow& a, const RawRow& b) { return a.timestamp < b.timestamp; });

  Seconds resolution{0};
  if (rows.size() >= 2) {
    resolution = rows[1].timestamp - rows[0].timestamp;
    if (resolution <= Seconds{0}) {
      throw Error(Errc::IrregularResolution,
                  "region " + region + ": duplicate timestamp " +
                      format_timestamp(rows[1].timestamp));
    }
  } else {
    resolution = Seconds{300};  // single point: assume the default signal cadence
  }

  std::vector<IntensityPoint> points;
  points.reserve(rows.size());
  const TimePoint origin = rows.front().timestamp;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const TimePoint expected = origin + Seconds{static_cast<std::int64_t>(i) * resolution.count()};
    const auto deviation = rows[i].timestamp - expected;
    if (deviation > Seconds{1} || deviation < Seconds{-1}) {
      throw Error(Errc::IrregularResolution,
                  "region " + region + ": expected " + format_timestamp(expected) + ", got " +
                      format_timestamp(rows[i].timestamp));
    }
    points.push_back({expected, rows[i].value});
  }
  return CarbonIntensitySeries(region, kind, resolution, std::move(points));
}

}  // namespace

IntensityDataset load_intensity_csv(const std::filesystem::path& path, SeriesKind default_kind) {
  CsvFile csv = read_csv(path);

  int region_col = csv.column("region");
  int ts_col = csv.column("timestamp");
  int value_col = csv.column("intensity_g_per_kwh");
  int kind_col = csv.column("kind");
  if (region_col < 0 || ts_col < 0 || value_col < 0) {
    // Headerless files are accepted with the positional layout; the first
    // line is then data, not a header.
    csv.rows.insert(csv.rows.begin(), csv.header);
    csv.line_numbers.insert(csv.line_numbers.begin(), 1);
    region_col = 0;
    ts_col = 1;
    value_col = 2;
    kind_col = csv.header.size() > 3 ? 3 : -1;
  }
  if (csv.rows.empty()) throw Error(Errc::EmptyFile, "no data rows in " + path.string());

  std::map<std::pair<RegionId, SeriesKind>, std::vector<RawRow>> grouped;
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    const auto& row = csv.rows[i];
    const std::size_t line_no = csv.line_numbers[i];
    const std::size_t needed =
        static_cast<std::size_t>(std::max({region_col, ts_col, value_col})) + 1;
    if (row.size() < needed) {
      throw Error(Errc::MalformedRow, "line " + std::to_string(line_no) + ": too few fields");
    }
    const RegionId region = row[static_cast<std::size_t>(region_col)];
    if (region.empty()) {
      throw Error(Errc::MalformedRow, "line " + std::to_string(line_no) + ": empty region");
    }
    const auto ts = try_parse_timestamp(row[static_cast<std::size_t>(ts_col)]);
    if (!ts) {
      throw Error(Errc::MalformedRow,
                  "line " + std::to_string(line_no) + ": bad timestamp '" +
                      row[static_cast<std::size_t>(ts_col)] + "'");
    }
    const double value = parse_intensity(row[static_cast<std::size_t>(value_col)], line_no);

    SeriesKind kind = default_kind;
    if (kind_col >= 0 && static_cast<std::size_t>(kind_col) < row.size() &&
        !row[static_cast<std::size_t>(kind_col)].empty()) {
      kind = parse_kind_token(row[static_cast<std::size_t>(kind_col)], line_no);
    }
    grouped[{region, kind}].push_back({*ts, value});
  }

  IntensityDataset dataset;
  for (auto& [key, rows] : grouped) {
    dataset.add_series(build_series(key.first, key.second, std::move(rows)));
  }
  return dataset;
}

void write_intensity_csv(const IntensityDataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << "region,timestamp,intensity_g_per_kwh,kind\n";
  char value_buf[32];
  for (const auto& region : dataset.regions()) {
    for (const SeriesKind kind : {SeriesKind::Actual, SeriesKind::Forecast}) {
      if (!dataset.has_series(region, kind)) continue;
      for (const auto& point : dataset.series(region, kind).points()) {
        std::snprintf(value_buf, sizeof(value_buf), "%.10g", point.grams_per_kwh);
        out << region << ',' << format_timestamp(point.timestamp) << ',' << value_buf << ','
            << series_kind_name(kind) << '\n';
      }
    }
  }
}

SynthConfig SynthConfig::from_config(const KeyValueConfig& config) {
  SynthConfig out;
  out.regions = static_cast<int>(config.get_int("regions", out.regions));
  out.resolution = Seconds{config.get_int("resolution_s", out.resolution.count())};
  out.days = config.get_double("days", out.days);
  out.base = config.get_double("base", out.base);
  out.amplitude = config.get_double("amplitude", out.amplitude);
  out.period_h = config.get_double("period_h", out.period_h);
  out.phase_step_h = config.get_double("phase_step_h", out.phase_step_h);
  out.noise = config.get_double("noise", out.noise);
  out.seed = static_cast<std::uint64_t>(config.get_int("seed", 0));
  if (config.has("start")) out.start = parse_timestamp(config.get("start"));
  return out;
}

IntensityDataset synthesize_dataset(const SynthConfig& config) {
  if (config.resolution <= Seconds{0}) {
    throw Error(Errc::InvalidConfig, "resolution_s must be positive");
  }
  if (config.days <= 0.0) throw Error(Errc::InvalidConfig, "days must be positive");
  if (config.regions < 1) throw Error(Errc::InvalidConfig, "regions must be >= 1");
  if (config.period_h <= 0.0) throw Error(Errc::InvalidConfig, "period_h must be positive");

  const auto duration_s = static_cast<std::int64_t>(std::llround(config.days * 86400.0));
  const std::int64_t count = duration_s / config.resolution.count();
  if (count < 1) throw Error(Errc::InvalidConfig, "duration shorter than one resolution step");

  const int width = config.regions > 100 ? 3 : 2;

  IntensityDataset dataset;
  for (int r = 0; r < config.regions; ++r) {
    char name[16];
    std::snprintf(name, sizeof(name), "r%0*d", width, r);
    const double phase_h = config.phase_step_h * r;

    std::vector<IntensityPoint> actual;
    actual.reserve(static_cast<std::size_t>(count));
    for (std::int64_t i = 0; i < count; ++i) {
      const TimePoint ts = config.start + Seconds{i * config.resolution.count()};
      const double hours_in = static_cast<double>((ts - config.start).count()) / 3600.0;
      const double angle = 2.0 * M_PI * (hours_in + phase_h) / config.period_h;
      const double value = std::max(0.0, config.base + config.amplitude * std::sin(angle));
      actual.push_back({ts, value});
    }

    // The forecast is the actual signal plus independent per-point noise,
    // seeded per region so adding regions does not reshuffle existing ones.
    std::vector<IntensityPoint> forecast = actual;
    if (config.noise > 0.0) {
      Rng rng(config.seed * 1000003u + static_cast<std::uint64_t>(r));
      for (auto& point : forecast) {
        point.grams_per_kwh = std::max(0.0, point.grams_per_kwh + rng.normal(0.0, config.noise));
      }
    }

    dataset.add_series(
        CarbonIntensitySeries(name, SeriesKind::Actual, config.resolution, std::move(actual)));
    dataset.add_series(
        CarbonIntensitySeries(name, SeriesKind::Forecast, config.resolution, std::move(forecast)));
  }
  return dataset;
}

}  // namespace carbonci
