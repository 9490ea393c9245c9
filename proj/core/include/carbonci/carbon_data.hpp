#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "carbonci/config.hpp"
#include "carbonci/time_util.hpp"

namespace carbonci {

/// Short region token, e.g. "eu-central-1". Must be non-empty and free of
/// whitespace; unique per dataset.
using RegionId = std::string;

enum class SeriesKind { Actual, Forecast };

const char* series_kind_name(SeriesKind kind);

struct IntensityPoint {
  TimePoint timestamp;
  double grams_per_kwh = 0.0;  // >= 0
};

/// One region's carbon-intensity signal, equally spaced at `resolution`.
/// The signal is a zero-order hold: each point's value applies from its
/// timestamp until the next point. Coverage is the half-open interval
/// [first timestamp, last timestamp + resolution).
class CarbonIntensitySeries {
 public:
  /// Validates spacing (points must sit on the resolution grid), value
  /// non-negativity and non-emptiness.
  CarbonIntensitySeries(RegionId region, SeriesKind kind, Seconds resolution,
                        std::vector<IntensityPoint> points);

  const RegionId& region() const { return region_; }
  SeriesKind kind() const { return kind_; }
  Seconds resolution() const { return resolution_; }
  const std::vector<IntensityPoint>& points() const { return points_; }

  TimePoint coverage_begin() const { return points_.front().timestamp; }
  TimePoint coverage_end() const { return points_.back().timestamp + resolution_; }
  bool covers(TimePoint t) const { return t >= coverage_begin() && t < coverage_end(); }

  /// Zero-order-hold lookup; throws Errc::OutOfCoverage outside coverage.
  double value_at(TimePoint t) const;

  /// Zero-order-hold lookup extended beyond coverage with the nearest
  /// covered value.
  double value_at_clamped(TimePoint t) const;

  /// Emissions over [start, start+duration) in REU: the exact piecewise
  /// integral of intensity, one REU being 1 gCO2-eq at 1 kW of constant draw.
  /// Throws Errc::OutOfCoverage if the window leaves coverage and
  /// Errc::ZeroOrNegativeDuration for empty windows.
  double integrate(TimePoint start, Seconds duration) const;

  /// Like integrate, but windows that leave coverage are charged at the
  /// nearest covered value instead of failing. Sets `clamped` when that
  /// happened.
  double integrate_clamped(TimePoint start, Seconds duration, bool* clamped = nullptr) const;

 private:
  RegionId region_;
  SeriesKind kind_;
  Seconds resolution_;
  std::vector<IntensityPoint> points_;
};

/// Per-region actual and forecast intensity series with a common resolution.
/// Immutable once assembled; safe for concurrent reads.
class IntensityDataset {
 public:
  /// Throws Errc::IrregularResolution when the resolution differs from
  /// already-present series, Errc::InvalidConfig on duplicate (region, kind).
  void add_series(CarbonIntensitySeries series);

  bool empty() const { return series_.empty(); }
  bool has_series(const RegionId& region, SeriesKind kind) const;
  const CarbonIntensitySeries& series(const RegionId& region, SeriesKind kind) const;

  /// All regions present under any kind, sorted lexicographically.
  std::vector<RegionId> regions() const;
  Seconds resolution() const;

  /// Interval on which every series answers: [max of begins, min of ends).
  TimePoint coverage_begin() const;
  TimePoint coverage_end() const;

  double intensity_at(const RegionId& region, TimePoint t, SeriesKind kind) const;
  double integrate_emissions(const RegionId& region, TimePoint start, Seconds duration,
                             SeriesKind kind) const;
  double integrate_emissions_clamped(const RegionId& region, TimePoint start, Seconds duration,
                                     SeriesKind kind, bool* clamped = nullptr) const;

  /// Copies the Actual series for any region lacking a Forecast ("perfect
  /// forecast" completion).
  void mirror_missing_forecasts();

  /// Replaces every Forecast series with a copy of the region's Actual series.
  void force_perfect_forecast();

  /// Verifies every region has both kinds; throws Errc::InvalidConfig.
  void validate_complete() const;

 private:
  std::map<std::pair<RegionId, SeriesKind>, CarbonIntensitySeries> series_;
};

/// Loads `region,timestamp,intensity_g_per_kwh[,kind]` rows. Rows without a
/// kind column take `default_kind`. Rows may appear in any order; each
/// region's resolution is inferred from its first two sorted timestamps and
/// enforced across the file (1 s of jitter is tolerated and snapped to the
/// grid).
IntensityDataset load_intensity_csv(const std::filesystem::path& path,
                                    SeriesKind default_kind = SeriesKind::Actual);

/// Writes all series of the dataset with an explicit kind column, regions
/// sorted, actual before forecast.
void write_intensity_csv(const IntensityDataset& dataset, const std::filesystem::path& path);

/// Generator for synthetic multi-region datasets: per-region phase-shifted
/// sinusoids around a base level, with optional Gaussian noise applied to the
/// forecast copy. Deterministic for a given seed.
struct SynthConfig {
  int regions = 2;
  Seconds resolution{300};
  double days = 1.0;
  double base = 100.0;
  double amplitude = 0.0;
  double period_h = 24.0;
  double phase_step_h = 0.0;
  double noise = 0.0;  // stddev of forecast noise in g/kWh; 0 = perfect forecast
  std::uint64_t seed = 0;
  TimePoint start = TimePoint{Seconds{1665532800}};  // 2022-10-12T00:00:00Z

  /// Reads keys regions, resolution_s, days, base, amplitude, period_h,
  /// phase_step_h, noise, seed and optional start.
  static SynthConfig from_config(const KeyValueConfig& config);
};

IntensityDataset synthesize_dataset(const SynthConfig& config);

}  // namespace carbonci
