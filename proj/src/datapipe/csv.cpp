#include "bla/datapipe/csv.hpp"

#include <boost/tokenizer.hpp>
#include <charconv>
#include <cmath>

#include "bla/error.hpp"

namespace bla::data {

std::vector<std::string> split_csv_line(const std::string& line) {
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  std::vector<std::string> fields;
  try {
    Tokenizer tok(line);
    fields.assign(tok.begin(), tok.end());
  } catch (const boost::escaped_list_error& e) {
    throw ParseError(std::string("malformed CSV line: ") + e.what());
  }
  return fields;
}

CsvReader::CsvReader(const std::filesystem::path& path) : path_(path), in_(path) {
  if (!in_) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in_, line)) throw ParseError(path.string() + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  line_ = 1;
  header_ = split_csv_line(line);
}

bool CsvReader::next(std::vector<std::string>& fields) {
  std::string line;
  while (std::getline(in_, line)) {
    ++line_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    try {
      fields = split_csv_line(line);
    } catch (const ParseError& e) {
      throw ParseError(path_.string() + " row " + std::to_string(line_) + ": " + e.what());
    }
    return true;
  }
  return false;
}

std::size_t CsvReader::column(std::string_view name) const {
  for (std::size_t i = 0; i < header_.size(); ++i) {
    if (header_[i] == name) return i;
  }
  throw ParseError(path_.string() + ": header lacks column '" + std::string(name) + "'");
}

double parse_real(std::string_view text, std::string_view where) {
  if (text.empty()) return 0.0;
  double value = 0.0;
  const char* begin = text.data();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    throw ParseError(std::string(where) + ": non-numeric value '" + std::string(text) + "'");
  }
  return value;
}

std::string format_real(double value) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace bla::data
