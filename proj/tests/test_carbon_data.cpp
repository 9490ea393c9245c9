#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "carbonci/carbon_data.hpp"
#include "carbonci/error.hpp"
#include "carbonci/rng.hpp"
#include "carbonci/time_util.hpp"

using namespace carbonci;

namespace {

const TimePoint kT0 = parse_timestamp("2022-10-12T00:00:00Z");

CarbonIntensitySeries make_series(std::vector<double> values, Seconds resolution = Seconds{3600},
                                  TimePoint start = kT0) {
  std::vector<IntensityPoint> points;
  for (std::size_t i = 0; i < values.size(); ++i) {
    points.push_back({start + Seconds{static_cast<long long>(i) * resolution.count()}, values[i]});
  }
  return CarbonIntensitySeries("test", SeriesKind::Actual, resolution, std::move(points));
}

/// Independent check: approximate the piecewise integral by charging each
/// second at its held value.
double riemann_1s(const CarbonIntensitySeries& series, TimePoint start, Seconds duration) {
  double total = 0.0;
  for (Seconds s{0}; s < duration; ++s) {
    total += series.value_at(start + s) / 3600.0;
  }
  return total;
}

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream out(path);
  out << content;
  return path;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("series construction validates shape") {
  CHECK_THROWS_AS(make_series({}), Error);
  try {
    make_series({100.0, -5.0});
    FAIL("expected NegativeIntensity");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NegativeIntensity);
  }

  std::vector<IntensityPoint> gapped = {{kT0, 1.0}, {kT0 + Seconds{7200}, 2.0}};
  CHECK_THROWS_AS(CarbonIntensitySeries("x", SeriesKind::Actual, Seconds{3600}, gapped), Error);
}

TEST_CASE("zero-order hold lookup") {
  const auto series = make_series({100.0, 50.0, 200.0});
  CHECK(series.value_at(kT0) == 100.0);
  CHECK(series.value_at(kT0 + Seconds{3599}) == 100.0);
  CHECK(series.value_at(kT0 + Seconds{3600}) == 50.0);
  CHECK(series.value_at(kT0 + Seconds{3 * 3600 - 1}) == 200.0);
  CHECK(series.coverage_end() == kT0 + Seconds{3 * 3600});
  CHECK_THROWS_AS(series.value_at(kT0 + Seconds{3 * 3600}), Error);
  CHECK_THROWS_AS(series.value_at(kT0 - Seconds{1}), Error);

  CHECK(series.value_at_clamped(kT0 - Seconds{999}) == 100.0);
  CHECK(series.value_at_clamped(kT0 + Seconds{999999}) == 200.0);
}

TEST_CASE("integral of a constant signal is level times hours") {
  const auto series = make_series({100.0, 100.0, 100.0});
  CHECK(series.integrate(kT0, Seconds{7200}) == 200.0);
  CHECK(series.integrate(kT0 + Seconds{1800}, Seconds{3600}) == 100.0);
}

TEST_CASE("integral across a level change splits the window exactly") {
  const auto series = make_series({100.0, 50.0});
  // Half an hour at 100 plus half an hour at 50.
  CHECK(series.integrate(kT0 + Seconds{1800}, Seconds{3600}) == 75.0);
}

TEST_CASE("integral rejects empty windows and windows leaving coverage") {
  const auto series = make_series({100.0, 50.0});
  CHECK_THROWS_AS(series.integrate(kT0, Seconds{0}), Error);
  CHECK_THROWS_AS(series.integrate(kT0, Seconds{-5}), Error);
  try {
    series.integrate(kT0 + Seconds{3600}, Seconds{3601});
    FAIL("expected OutOfCoverage");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::OutOfCoverage);
  }
}

TEST_CASE("integral agrees with a one-second Riemann oracle") {
  Rng rng(2024);
  std::vector<double> values;
  for (int i = 0; i < 48; ++i) values.push_back(rng.uniform(10.0, 500.0));
  const auto series = make_series(values, Seconds{300});

  for (int trial = 0; trial < 50; ++trial) {
    const auto offset = rng.uniform_int(0, 47 * 300);
    const auto duration = rng.uniform_int(1, 48 * 300 - offset);
    const TimePoint start = kT0 + Seconds{offset};
    const double exact = series.integrate(start, Seconds{duration});
    const double approx = riemann_1s(series, start, Seconds{duration});
    CHECK(std::fabs(exact - approx) <= 1e-6 * std::max(1.0, std::fabs(approx)));
  }
}

TEST_CASE("integral is additive over adjacent windows") {
  Rng rng(99);
  std::vector<double> values;
  for (int i = 0; i < 24; ++i) values.push_back(rng.uniform(0.0, 400.0));
  const auto series = make_series(values, Seconds{300});

  for (int trial = 0; trial < 100; ++trial) {
    const auto a = rng.uniform_int(1, 3600);
    const auto b = rng.uniform_int(1, 3600);
    const TimePoint start = kT0 + Seconds{rng.uniform_int(0, 24 * 300 - a - b - 1)};
    const double whole = series.integrate(start, Seconds{a + b});
    const double split = series.integrate(start, Seconds{a}) +
                         series.integrate(start + Seconds{a}, Seconds{b});
    CHECK(whole == doctest::Approx(split).epsilon(1e-12));
  }
}

TEST_CASE("integral scales linearly with the signal") {
  const auto series = make_series({120.0, 80.0, 240.0});
  const auto doubled = make_series({240.0, 160.0, 480.0});
  const double base = series.integrate(kT0 + Seconds{600}, Seconds{7000});
  const double twice = doubled.integrate(kT0 + Seconds{600}, Seconds{7000});
  CHECK(twice == doctest::Approx(2.0 * base).epsilon(1e-12));
}

TEST_CASE("clamped integral equals the strict one inside coverage") {
  const auto series = make_series({100.0, 50.0, 75.0});
  bool clamped = true;
  const double strict = series.integrate(kT0 + Seconds{100}, Seconds{9000});
  const double lenient = series.integrate_clamped(kT0 + Seconds{100}, Seconds{9000}, &clamped);
  CHECK(strict == lenient);
  CHECK_FALSE(clamped);
}

TEST_CASE("clamped integral charges the nearest value outside coverage") {
  const auto series = make_series({100.0, 50.0});
  bool clamped = false;
  // One hour before coverage at 100, then the covered two hours.
  CHECK(series.integrate_clamped(kT0 - Seconds{3600}, Seconds{3 * 3600}, &clamped) ==
        100.0 + 150.0);
  CHECK(clamped);
  // The covered two hours, then one hour after coverage at 50.
  clamped = false;
  CHECK(series.integrate_clamped(kT0, Seconds{3 * 3600}, &clamped) == 150.0 + 50.0);
  CHECK(clamped);
  // Entirely past coverage.
  CHECK(series.integrate_clamped(kT0 + Seconds{4 * 3600}, Seconds{1800}) == 25.0);
}

TEST_CASE("dataset enforces one resolution and no duplicates") {
  IntensityDataset dataset;
  dataset.add_series(make_series({1.0, 2.0}));
  CHECK_THROWS_AS(dataset.add_series(make_series({1.0, 2.0})), Error);
  std::vector<IntensityPoint> fine = {{kT0, 1.0}, {kT0 + Seconds{300}, 2.0}};
  CHECK_THROWS_AS(
      dataset.add_series(CarbonIntensitySeries("y", SeriesKind::Actual, Seconds{300}, fine)),
      Error);
}

TEST_CASE("dataset coverage is the intersection of its series") {
  IntensityDataset dataset;
  dataset.add_series(make_series({1.0, 1.0, 1.0}));  // 00:00 .. 03:00
  std::vector<IntensityPoint> late = {{kT0 + Seconds{3600}, 2.0},
                                      {kT0 + Seconds{7200}, 2.0},
                                      {kT0 + Seconds{10800}, 2.0}};
  dataset.add_series(CarbonIntensitySeries("z", SeriesKind::Actual, Seconds{3600}, late));
  CHECK(dataset.coverage_begin() == kT0 + Seconds{3600});
  CHECK(dataset.coverage_end() == kT0 + Seconds{10800});
  CHECK(dataset.regions() == std::vector<RegionId>{"test", "z"});
  CHECK_THROWS_AS(dataset.series("missing", SeriesKind::Actual), Error);
}

TEST_CASE("forecast mirroring and forcing") {
  IntensityDataset dataset;
  dataset.add_series(make_series({10.0, 20.0}));
  CHECK_FALSE(dataset.has_series("test", SeriesKind::Forecast));
  dataset.mirror_missing_forecasts();
  REQUIRE(dataset.has_series("test", SeriesKind::Forecast));
  CHECK(dataset.intensity_at("test", kT0, SeriesKind::Forecast) == 10.0);
  dataset.validate_complete();

  // Forcing replaces an existing, different forecast with the actual signal.
  IntensityDataset other;
  other.add_series(make_series({10.0, 20.0}));
  std::vector<IntensityPoint> rough = {{kT0, 99.0}, {kT0 + Seconds{3600}, 99.0}};
  other.add_series(CarbonIntensitySeries("test", SeriesKind::Forecast, Seconds{3600}, rough));
  other.force_perfect_forecast();
  CHECK(other.intensity_at("test", kT0, SeriesKind::Forecast) == 10.0);
}

TEST_CASE("intensity csv loading infers resolution per region") {
  const auto path = write_temp("carbonci_intensity_basic.csv",
                               "region,timestamp,intensity_g_per_kwh\n"
                               "eu,2022-10-12T00:00:00Z,100\n"
                               "eu,2022-10-12T01:00:00Z,110\n"
                               "eu,2022-10-12T02:00:00Z,120\n"
                               "us,2022-10-12T00:00:00Z,200\n"
                               "us,2022-10-12T01:00:00Z,210\n"
                               "us,2022-10-12T02:00:00Z,220\n");
  const IntensityDataset dataset = load_intensity_csv(path);
  CHECK(dataset.resolution() == Seconds{3600});
  CHECK(dataset.regions() == std::vector<RegionId>{"eu", "us"});
  CHECK(dataset.intensity_at("us", kT0 + Seconds{5400}, SeriesKind::Actual) == 210.0);
}

TEST_CASE("intensity csv loading is order independent") {
  const std::string shuffled =
      "region,timestamp,intensity_g_per_kwh\n"
      "eu,2022-10-12T02:00:00Z,120\n"
      "eu,2022-10-12T00:00:00Z,100\n"
      "eu,2022-10-12T01:00:00Z,110\n";
  const std::string ordered =
      "region,timestamp,intensity_g_per_kwh\n"
      "eu,2022-10-12T00:00:00Z,100\n"
      "eu,2022-10-12T01:00:00Z,110\n"
      "eu,2022-10-12T02:00:00Z,120\n";
  const auto a = load_intensity_csv(write_temp("carbonci_shuffled.csv", shuffled));
  const auto b = load_intensity_csv(write_temp("carbonci_ordered.csv", ordered));
  CHECK(a.series("eu", SeriesKind::Actual).points().size() ==
        b.series("eu", SeriesKind::Actual).points().size());
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(a.series("eu", SeriesKind::Actual).points()[i].timestamp ==
          b.series("eu", SeriesKind::Actual).points()[i].timestamp);
    CHECK(a.series("eu", SeriesKind::Actual).points()[i].grams_per_kwh ==
          b.series("eu", SeriesKind::Actual).points()[i].grams_per_kwh);
  }
}

TEST_CASE("intensity csv loading reports bad rows with line numbers") {
  const auto negative = write_temp("carbonci_negative.csv",
                                   "region,timestamp,intensity_g_per_kwh\n"
                                   "eu,2022-10-12T00:00:00Z,-5\n");
  try {
    load_intensity_csv(negative);
    FAIL("expected NegativeIntensity");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::NegativeIntensity);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }

  const auto irregular = write_temp("carbonci_irregular.csv",
                                    "region,timestamp,intensity_g_per_kwh\n"
                                    "eu,2022-10-12T00:00:00Z,10\n"
                                    "eu,2022-10-12T01:00:00Z,11\n"
                                    "eu,2022-10-12T02:30:00Z,12\n");
  try {
    load_intensity_csv(irregular);
    FAIL("expected IrregularResolution");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::IrregularResolution);
  }

  const auto bad_ts = write_temp("carbonci_badts.csv",
                                 "region,timestamp,intensity_g_per_kwh\n"
                                 "eu,someday,10\n");
  try {
    load_intensity_csv(bad_ts);
    FAIL("expected MalformedRow");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MalformedRow);
  }
}

TEST_CASE("intensity csv round-trips through write and load") {
  SynthConfig cfg;
  cfg.regions = 3;
  cfg.resolution = Seconds{300};
  cfg.days = 0.5;
  cfg.base = 250.0;
  cfg.amplitude = 100.0;
  cfg.phase_step_h = 3.0;
  cfg.noise = 20.0;
  cfg.seed = 5;
  const IntensityDataset original = synthesize_dataset(cfg);

  const auto path = std::filesystem::temp_directory_path() / "carbonci_roundtrip.csv";
  write_intensity_csv(original, path);
  const IntensityDataset loaded = load_intensity_csv(path);

  for (const auto& region : original.regions()) {
    for (const SeriesKind kind : {SeriesKind::Actual, SeriesKind::Forecast}) {
      const auto& a = original.series(region, kind).points();
      const auto& b = loaded.series(region, kind).points();
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].timestamp == b[i].timestamp);
        CHECK(a[i].grams_per_kwh == doctest::Approx(b[i].grams_per_kwh).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("synthesis is deterministic and honors its knobs") {
  SynthConfig cfg;
  cfg.regions = 12;
  cfg.resolution = Seconds{300};
  cfg.days = 4.0;
  cfg.base = 300.0;
  cfg.amplitude = 150.0;
  cfg.phase_step_h = 2.0;
  cfg.noise = 25.0;
  cfg.seed = 7;

  const auto p1 = std::filesystem::temp_directory_path() / "carbonci_synth_a.csv";
  const auto p2 = std::filesystem::temp_directory_path() / "carbonci_synth_b.csv";
  write_intensity_csv(synthesize_dataset(cfg), p1);
  write_intensity_csv(synthesize_dataset(cfg), p2);
  CHECK(slurp(p1) == slurp(p2));

  const IntensityDataset dataset = synthesize_dataset(cfg);
  CHECK(dataset.regions().size() == 12);
  for (const auto& region : dataset.regions()) {
    CHECK(dataset.series(region, SeriesKind::Actual).points().size() == 1152);
  }
}

TEST_CASE("synthesis with zero amplitude is flat at the base level") {
  SynthConfig cfg;
  cfg.regions = 2;
  cfg.days = 1.0;
  cfg.base = 123.0;
  cfg.amplitude = 0.0;
  const IntensityDataset dataset = synthesize_dataset(cfg);
  for (const auto& point : dataset.series("r00", SeriesKind::Actual).points()) {
    CHECK(point.grams_per_kwh == 123.0);
  }
}

TEST_CASE("synthesis validates its config") {
  SynthConfig cfg;
  cfg.days = -1.0;
  CHECK_THROWS_AS(synthesize_dataset(cfg), Error);
  cfg.days = 1.0;
  cfg.regions = 0;
  CHECK_THROWS_AS(synthesize_dataset(cfg), Error);
  cfg.regions = 1;
  cfg.resolution = Seconds{0};
  CHECK_THROWS_AS(synthesize_dataset(cfg), Error);
}

TEST_CASE("synth config reads the generator keys") {
  const auto cfg = KeyValueConfig::parse_text(
      "regions = 12\n"
      "resolution_s = 300\n"
      "days = 4\n"
      "base = 300\n"
      "amplitude = 150\n"
      "period_h = 24\n"
      "phase_step_h = 2\n"
      "noise = 25\n"
      "seed = 7\n"
      "start = 2022-10-12T00:00:00Z\n");
  const SynthConfig synth = SynthConfig::from_config(cfg);
  CHECK(synth.regions == 12);
  CHECK(synth.resolution == Seconds{300});
  CHECK(synth.days == 4.0);
  CHECK(synth.phase_step_h == 2.0);
  CHECK(synth.seed == 7);
  CHECK(synth.start == kT0);
}
