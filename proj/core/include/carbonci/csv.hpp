#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace carbonci {

// Plain comma-separated files, no quoting. None of the engine's file formats
// carry embedded commas; fields are trimmed of surrounding whitespace.

std::vector<std::string> split_csv_line(const std::string& line);

struct CsvFile {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line per row

  /// Index of a header column, or -1.
  int column(const std::string& name) const;
};

/// Reads a CSV with a header row. Throws Errc::IoError if the file cannot be
/// opened and Errc::EmptyFile if it contains no data rows.
CsvFile read_csv(const std::filesystem::path& path);

}  // namespace carbonci
