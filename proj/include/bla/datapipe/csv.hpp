#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace bla::data {

/// Line-oriented CSV reader; fields may be double-quoted.
class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path);

  const std::vector<std::string>& header() const noexcept { return header_; }
  /// Next data row; returns false at end of file. Blank lines are skipped.
  bool next(std::vector<std::string>& fields);
  /// 1-based line number of the row last returned (header is line 1).
  std::size_t line() const noexcept { return line_; }
  const std::filesystem::path& path() const noexcept { return path_; }

  /// Index of `name` in the header, or throws ParseError.
  std::size_t column(std::string_view name) const;

 private:
  std::filesystem::path path_;
  std::ifstream in_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
};

std::vector<std::string> split_csv_line(const std::string& line);

/// Parses a real; empty text reads as 0. Throws ParseError naming `where`.
double parse_real(std::string_view text, std::string_view where);

/// Shortest text that parses back to exactly `value`.
std::string format_real(double value);

/// Opens `path` for writing or throws IoError.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace bla::data
