#pragma once

// CSV ingestion and locale-independent number formatting.

#include "pcount/errors.hpp"
#include "pcount/fourier.hpp"
#include "pcount/simulate.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace pcount {

/// Shortest round-trip decimal form; "nan"/"inf"/"-inf" for non-finite values.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_long(std::string_view s, long& out) {
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

}  // namespace detail

/// Parses a count series with header `t,count` (an optional `season` column
/// is checked against ((t-1) mod T) + 1). Rows must have t = 1, 2, ...
/// Errors name the offending line.
inline CountSeries parse_counts_csv(std::istream& in, int period, const std::string& source = "data") {
  if (period < 1) throw ConfigError("period must be >= 1");
  std::string line;
  std::size_t lineno = 0;
  auto fail = [&](const std::string& what) {
    return DataError(source + ":" + std::to_string(lineno) + ": " + what, lineno);
  };
  int col_t = -1, col_count = -1, col_season = -1;
  std::size_t ncols = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!detail::trim(line).empty()) break;
  }
  if (lineno == 0 || detail::trim(line).empty()) throw DataError(source + ": empty file");
  {
    const auto cols = detail::split_commas(line);
    ncols = cols.size();
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (cols[i] == "t") col_t = static_cast<int>(i);
      else if (cols[i] == "count") col_count = static_cast<int>(i);
      else if (cols[i] == "season") col_season = static_cast<int>(i);
      else throw fail("unexpected column '" + std::string(cols[i]) + "' (expected t, count, optional season)");
    }
    if (col_t < 0 || col_count < 0) throw fail("header must contain columns t and count");
  }
  CountSeries out;
  out.period = period;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto cols = detail::split_commas(line);
    if (cols.size() != ncols) throw fail("expected " + std::to_string(ncols) + " fields");
    long t = 0, x = 0;
    if (!detail::parse_long(cols[col_t], t)) throw fail("t is not an integer");
    if (t != static_cast<long>(out.size()) + 1)
      throw fail("expected t=" + std::to_string(out.size() + 1) + ", got t=" + std::to_string(t));
    if (!detail::parse_long(cols[col_count], x)) throw fail("count '" + std::string(cols[col_count]) + "' is not an integer");
    if (x < 0) throw fail("count must be nonnegative");
    if (col_season >= 0) {
      long s = 0;
      if (!detail::parse_long(cols[col_season], s)) throw fail("season is not an integer");
      if (s != season_of(t, period))
        throw fail("season " + std::to_string(s) + " disagrees with t=" + std::to_string(t) + " and period " +
                   std::to_string(period));
    }
    out.x.push_back(x);
  }
  if (out.size() == 0) throw DataError(source + ": no data rows");
  return out;
}

inline CountSeries read_counts_csv(const std::string& path, int period) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open data file '" + path + "'");
  return parse_counts_csv(in, period, path);
}

inline std::string counts_csv(const CountSeries& series) {
  std::ostringstream os;
  os << "t,season,count\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const long t = static_cast<long>(i) + 1;
    os << t << ',' << series.season(t) << ',' << series.x[i] << '\n';
  }
  return os.str();
}

}  // namespace pcount
