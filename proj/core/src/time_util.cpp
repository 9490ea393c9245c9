#include "carbonci/time_util.hpp"

#include <cctype>
#include <cstdio>

#include "carbonci/error.hpp"

namespace carbonci {

namespace {

bool parse_fixed_int(const std::string& s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  int value = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    value = value * 10 + (s[i] - '0');
  }
  out = value;
  return true;
}

}  // namespace

std::optional<TimePoint> try_parse_timestamp(const std::string& text) {
  using namespace std::chrono;

  // Minimal form: YYYY-MM-DDTHH:MM:SS (19 chars).
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  if (!parse_fixed_int(text, 0, 4, y)) return std::nullopt;
  if (text.size() < 19 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (text[10] != 'T' && text[10] != ' ') return std::nullopt;
  if (text[13] != ':' || text[16] != ':') return std::nullopt;
  if (!parse_fixed_int(text, 5, 2, mo) || !parse_fixed_int(text, 8, 2, d) ||
      !parse_fixed_int(text, 11, 2, h) || !parse_fixed_int(text, 14, 2, mi) ||
      !parse_fixed_int(text, 17, 2, se)) {
    return std::nullopt;
  }

  const std::string suffix = text.substr(19);
  if (!suffix.empty() && suffix != "Z" && suffix != "+00:00" && suffix != "+0000") {
    return std::nullopt;
  }

  if (mo < 1 || mo > 12 || d < 1 || h > 23 || mi > 59 || se > 60) return std::nullopt;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;

  return TimePoint{sys_days{ymd} + hours{h} + minutes{mi} + seconds{se}};
}

TimePoint parse_timestamp(const std::string& text) {
  auto t = try_parse_timestamp(text);
  if (!t) throw Error(Errc::MalformedRow, "bad timestamp '" + text + "'");
  return *t;
}

std::string format_timestamp(TimePoint t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const auto tod = t - day_point;
  const int h = static_cast<int>(duration_cast<hours>(tod).count());
  const int mi = static_cast<int>(duration_cast<minutes>(tod % hours{1}).count());
  const int se = static_cast<int>((tod % minutes{1}).count());

  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", int(ymd.year()),
                unsigned(ymd.month()), unsigned(ymd.day()), h, mi, se);
  return buf;
}

Seconds seconds_of_day(TimePoint t) {
  auto s = t.time_since_epoch() % kSecondsPerDay;
  if (s < Seconds{0}) s += kSecondsPerDay;
  return s;
}

TimePoint start_of_day(TimePoint t) { return t - seconds_of_day(t); }

Seconds time_of_day_distance(Seconds a, Seconds b) {
  Seconds d = a > b ? a - b : b - a;
  return std::min(d, kSecondsPerDay - d);
}

}  // namespace carbonci
