#pragma once

#include <filesystem>
#include <string>

#include "carbonci/time_util.hpp"
#include "carbonci/workflow.hpp"

namespace carbonci {

/// Parses a duration literal: `1h`, `30m`, `45s`, composed forms (`1h30m`),
/// or a bare integer meaning seconds. Integers only; the result must be
/// positive. Throws BadDurationLiteral otherwise.
Seconds parse_duration_literal(const std::string& text);

/// Extracts the scheduling hints from a workflow definition document.
///
/// The document is GitHub-Actions-shaped YAML. Recognized keys: `carbon-aware`
/// on a job, and `duration` / `deadline` / `allowed-regions` either directly
/// on a job or inside a step's `with:` block. Everything else is ignored, so
/// parsing never fails on documents without these keys.
///
/// Merge rules: step-level duration/deadline/regions win over job-level ones;
/// multiple steps sum durations, take the minimum deadline, and intersect
/// region sets. Multiple jobs combine the same way, with carbon-aware being
/// true if any job opts in.
///
/// Throws UnparseableDocument on YAML syntax errors, BadDurationLiteral on
/// bad duration strings, UnknownRegionFormat on empty or whitespace-bearing
/// region tokens.
Annotation parse_annotation(const std::string& document_text);

Annotation parse_annotation_file(const std::filesystem::path& path);

}  // namespace carbonci
