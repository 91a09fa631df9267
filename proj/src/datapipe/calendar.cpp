#include "bla/datapipe/calendar.hpp"

#include <charconv>
#include <cstdio>

#include "bla/error.hpp"

namespace bla::data {
namespace {

template <typename Int>
bool parse_int(std::string_view text, Int& out) {
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

Date parse_date(std::string_view text) {
  int y = 0;
  unsigned m = 0, d = 0;
  const bool shaped = text.size() == 10 && text[4] == '-' && text[7] == '-';
  if (!shaped || !parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
      !parse_int(text.substr(8, 2), d)) {
    throw ParseError("malformed date '" + std::string(text) + "', expected YYYY-MM-DD");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw ParseError("invalid calendar date '" + std::string(text) + "'");
  return Date(ymd);
}

std::string format_date(Date date) {
  const std::chrono::year_month_day ymd(date);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Date SnapshotConfig::first_day() const {
  return gamma - std::chrono::days(static_cast<long>(observation_days)) + std::chrono::days(1);
}

Date SnapshotConfig::day(std::size_t index) const {
  return first_day() + std::chrono::days(static_cast<long>(index));
}

std::optional<std::size_t> SnapshotConfig::day_index(Date date) const {
  const long offset = (date - first_day()).count();
  if (offset < 0 || offset >= static_cast<long>(observation_days)) return std::nullopt;
  return static_cast<std::size_t>(offset);
}

std::optional<std::size_t> SnapshotConfig::label_window(Date date) const {
  const long offset = (date - first_day()).count() - static_cast<long>(window_days);
  if (offset < 0 || offset >= static_cast<long>(observation_days)) return std::nullopt;
  return static_cast<std::size_t>(offset) / window_days;
}

Date SnapshotConfig::snapshot_end(std::size_t t) const {
  return first_day() + std::chrono::days(static_cast<long>((t + 1) * window_days - 1));
}

void SnapshotConfig::validate() const {
  if (window_days < 1) throw ConfigError("snapshot window must be at least one day");
  if (observation_days < window_days) throw ConfigError("observation span shorter than snapshot window");
  if (observation_days % window_days != 0) {
    throw ConfigError("observation span " + std::to_string(observation_days) +
                      " is not a multiple of snapshot window " + std::to_string(window_days));
  }
}

}  // namespace bla::data
