#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace ambimaze {

// Trailing mean over `window` episodes; shorter prefixes average what exists.
inline std::vector<double> rolling_average(const std::vector<int>& returns, std::size_t window = 100) {
  if (window == 0) throw std::invalid_argument("rolling_average: window must be >= 1");
  std::vector<double> out;
  out.reserve(returns.size());
  long long sum = 0;
  for (std::size_t i = 0; i < returns.size(); ++i) {
    sum += returns[i];
    if (i >= window) sum -= returns[i - window];
    const std::size_t n = std::min(i + 1, window);
    out.push_back(static_cast<double>(sum) / static_cast<double>(n));
  }
  return out;
}

struct MetricSeries {
  std::vector<int> returns;
  std::vector<int> steps;
  std::vector<double> rolling;
  std::vector<double> wall_seconds;  // elapsed since run start; not part of the CSV

  std::size_t size() const { return returns.size(); }

  void push(int ret, int episode_steps, double elapsed = 0.0) {
    if (ret != 0 && ret != 1) throw std::invalid_argument("metric series: return must be 0 or 1");
    returns.push_back(ret);
    steps.push_back(episode_steps);
    wall_seconds.push_back(elapsed);
  }

  void finalize(std::size_t window) { rolling = rolling_average(returns, window); }

  double final_rolling() const { return rolling.empty() ? 0.0 : rolling.back(); }

  bool operator==(const MetricSeries& o) const {
    return returns == o.returns && steps == o.steps && rolling == o.rolling;
  }
};

struct AggregateRow {
  double mean = 0, min = 0, max = 0;
};

// Per-episode mean/min/max of the rolling averages over the episode indices
// every series reaches.
inline std::vector<AggregateRow> aggregate(const std::vector<MetricSeries>& series) {
  if (series.empty()) return {};
  std::size_t n = series.front().rolling.size();
  for (const auto& s : series) n = std::min(n, s.rolling.size());
  std::vector<AggregateRow> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0, lo = series.front().rolling[i], hi = lo;
    for (const auto& s : series) {
      const double v = s.rolling[i];
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    // clamped: the rounded sum can land just outside [lo, hi]
    out[i] = {std::clamp(sum / static_cast<double>(series.size()), lo, hi), lo, hi};
  }
  return out;
}

// Shortest round-tripping decimal form.
inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(std::string_view s) {
  double v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

inline long long parse_integer(std::string_view s) {
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc{} || r.ptr != s.data() + s.size())
    throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
  return v;
}

inline constexpr std::string_view kSeriesHeader = "episode,return,steps,rolling_avg";
inline constexpr std::string_view kAggregateHeader = "episode,mean,min,max";

inline std::string series_csv(const MetricSeries& s) {
  std::string out(kSeriesHeader);
  out += '\n';
  for (std::size_t i = 0; i < s.size(); ++i) {
    out += std::to_string(i + 1);
    out += ',';
    out += std::to_string(s.returns[i]);
    out += ',';
    out += std::to_string(s.steps[i]);
    out += ',';
    out += format_double(s.rolling[i]);
    out += '\n';
  }
  return out;
}

namespace detail {

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename Fn>
void for_each_csv_row(std::string_view text, std::string_view header, std::size_t columns, Fn fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line_no == 1) {
      if (line != header) throw std::invalid_argument("csv: expected header '" + std::string(header) + "'");
      continue;
    }
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != columns)
      throw std::invalid_argument("csv line " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                                  " fields");
    fn(line_no, fields);
  }
  if (line_no == 0) throw std::invalid_argument("csv: empty input");
}

}  // namespace detail

inline MetricSeries parse_series_csv(std::string_view text) {
  MetricSeries s;
  detail::for_each_csv_row(text, kSeriesHeader, 4, [&](std::size_t line, const auto& f) {
    if (parse_integer(f[0]) != static_cast<long long>(s.size() + 1))
      throw std::invalid_argument("csv line " + std::to_string(line) + ": episodes out of order");
    s.push(static_cast<int>(parse_integer(f[1])), static_cast<int>(parse_integer(f[2])));
    s.rolling.push_back(parse_double(f[3]));
  });
  return s;
}

inline std::string aggregate_csv(const std::vector<AggregateRow>& rows) {
  std::string out(kAggregateHeader);
  out += '\n';
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out += std::to_string(i + 1) + ',' + format_double(rows[i].mean) + ',' + format_double(rows[i].min) + ',' +
           format_double(rows[i].max) + '\n';
  }
  return out;
}

inline std::vector<AggregateRow> parse_aggregate_csv(std::string_view text) {
  std::vector<AggregateRow> rows;
  detail::for_each_csv_row(text, kAggregateHeader, 4, [&](std::size_t, const auto& f) {
    rows.push_back({parse_double(f[1]), parse_double(f[2]), parse_double(f[3])});
  });
  return rows;
}

inline void write_text_file(const std::string& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace ambimaze
