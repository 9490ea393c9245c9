#include "carbonci/annotation.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>

#include "carbonci/error.hpp"

namespace carbonci {
namespace {

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

std::string trimmed(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

// YAML 1.1 style booleans, decoded by hand so behavior does not depend on the
// YAML library's scalar resolution rules.
std::optional<bool> decode_bool(const std::string& text) {
  std::string t = to_lower(trimmed(text));
  if (t == "yes" || t == "true" || t == "on") return true;
  if (t == "no" || t == "false" || t == "off") return false;
  return std::nullopt;
}

/// What one scope (a job body or a step's `with:` block) contributes.
struct Hints {
  std::optional<Seconds> duration;
  std::optional<Seconds> deadline;
  std::optional<std::set<RegionId>> regions;

  bool any() const { return duration || deadline || regions; }
};

std::set<RegionId> intersect(const std::set<RegionId>& a, const std::set<RegionId>& b) {
  std::set<RegionId> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.begin()));
  return out;
}

/// Folds `next` into `acc`: durations add up, the tightest deadline wins,
/// region sets intersect.
void accumulate(Hints& acc, const Hints& next) {
  if (next.duration) acc.duration = acc.duration.value_or(Seconds{0}) + *next.duration;
  if (next.deadline) acc.deadline = acc.deadline ? std::min(*acc.deadline, *next.deadline) : *next.deadline;
  if (next.regions) acc.regions = acc.regions ? intersect(*acc.regions, *next.regions) : *next.regions;
}

void check_region_token(const std::string& token) {
  bool has_space = std::any_of(token.begin(), token.end(),
                               [](unsigned char c) { return std::isspace(c) != 0; });
  if (token.empty() || has_space) {
    throw Error(Errc::UnknownRegionFormat, "bad region name '" + token + "'");
  }
}

std::set<RegionId> parse_region_list(const YAML::Node& node) {
  std::set<RegionId> regions;
  if (node.IsScalar()) {
    std::string token = node.Scalar();
    check_region_token(token);
    regions.insert(std::move(token));
    return regions;
  }
  if (node.IsSequence()) {
    for (const auto& item : node) {
      if (!item.IsScalar()) {
        throw Error(Errc::UnknownRegionFormat, "allowed-regions entries must be plain names");
      }
      std::string token = item.Scalar();
      check_region_token(token);
      regions.insert(std::move(token));
    }
    return regions;
  }
  throw Error(Errc::UnknownRegionFormat, "allowed-regions must be a name or a list of names");
}

Seconds parse_duration_node(const YAML::Node& node, const char* key) {
  if (!node.IsScalar()) {
    throw Error(Errc::BadDurationLiteral, std::string(key) + " must be a duration like '1h30m'");
  }
  return parse_duration_literal(node.Scalar());
}

/// Reads the three hint keys from one mapping; absent keys stay unset.
Hints read_hints(const YAML::Node& map) {
  Hints h;
  if (!map.IsDefined() || !map.IsMap()) return h;
  if (auto n = map["duration"]) h.duration = parse_duration_node(n, "duration");
  if (auto n = map["deadline"]) h.deadline = parse_duration_node(n, "deadline");
  if (auto n = map["allowed-regions"]) h.regions = parse_region_list(n);
  return h;
}

/// A step may put hints under `with:` (the Listing-style placement) or
/// directly on the step; `with:` wins per key.
Hints read_step_hints(const YAML::Node& step) {
  if (!step.IsMap()) return {};
  Hints with_hints = read_hints(step["with"]);
  Hints direct = read_hints(step);
  if (!with_hints.duration) with_hints.duration = direct.duration;
  if (!with_hints.deadline) with_hints.deadline = direct.deadline;
  if (!with_hints.regions) with_hints.regions = direct.regions;
  return with_hints;
}

struct JobHints {
  bool carbon_aware = false;
  Hints hints;
};

JobHints read_job(const YAML::Node& job) {
  JobHints out;
  if (!job.IsMap()) return out;

  if (auto flag = job["carbon-aware"]) {
    if (!flag.IsScalar()) {
      throw Error(Errc::UnparseableDocument, "carbon-aware must be a boolean");
    }
    auto value = decode_bool(flag.Scalar());
    if (!value) {
      throw Error(Errc::UnparseableDocument,
                  "carbon-aware: expected yes/no, got '" + flag.Scalar() + "'");
    }
    out.carbon_aware = *value;
  }

  Hints job_level = read_hints(job);
  Hints step_level;
  if (auto steps = job["steps"]; steps && steps.IsSequence()) {
    for (const auto& step : steps) {
      accumulate(step_level, read_step_hints(step));
    }
  }

  // Step-provided fields shadow job-level ones.
  out.hints.duration = step_level.duration ? step_level.duration : job_level.duration;
  out.hints.deadline = step_level.deadline ? step_level.deadline : job_level.deadline;
  out.hints.regions = step_level.regions ? step_level.regions : job_level.regions;
  return out;
}

}  // namespace

Seconds parse_duration_literal(const std::string& text) {
  std::string t = trimmed(text);
  if (t.empty()) throw Error(Errc::BadDurationLiteral, "empty duration");

  auto bad = [&]() -> Error {
    return Error(Errc::BadDurationLiteral, "cannot parse duration '" + text + "'");
  };

  long long total = 0;
  std::size_t i = 0;
  bool bare_number = t.find_first_not_of("0123456789") == std::string::npos;
  while (i < t.size()) {
    if (std::isdigit(static_cast<unsigned char>(t[i])) == 0) throw bad();
    long long value = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i])) != 0) {
      value = value * 10 + (t[i] - '0');
      if (value > 1'000'000'000'000LL) throw bad();
      ++i;
    }
    long long multiplier = 1;  // bare integers count seconds
    if (!bare_number) {
      if (i >= t.size()) throw bad();
      switch (std::tolower(static_cast<unsigned char>(t[i]))) {
        case 'h': multiplier = 3600; break;
        case 'm': multiplier = 60; break;
        case 's': multiplier = 1; break;
        default: throw bad();
      }
      ++i;
    }
    total += value * multiplier;
    if (total > 4'000'000'000'000LL) throw bad();
  }
  if (total <= 0) {
    throw Error(Errc::BadDurationLiteral, "duration '" + text + "' must be positive");
  }
  return Seconds{total};
}

Annotation parse_annotation(const std::string& document_text) {
  std::vector<YAML::Node> docs;
  try {
    docs = YAML::LoadAll(document_text);
  } catch (const YAML::Exception& e) {
    throw Error(Errc::UnparseableDocument, e.what());
  }

  bool carbon_aware = false;
  Hints merged;
  for (const auto& doc : docs) {
    if (!doc.IsMap()) continue;
    auto jobs = doc["jobs"];
    if (!jobs || !jobs.IsMap()) continue;
    for (const auto& entry : jobs) {
      JobHints jh = read_job(entry.second);
      carbon_aware = carbon_aware || jh.carbon_aware;
      accumulate(merged, jh.hints);
    }
  }

  Annotation ann;
  ann.carbon_aware = carbon_aware;
  ann.duration_estimate = merged.duration;
  ann.deadline_offset = merged.deadline;
  ann.allowed_regions = merged.regions;
  return ann;
}

Annotation parse_annotation_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_annotation(buf.str());
}

}  // namespace carbonci
