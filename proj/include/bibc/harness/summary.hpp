#pragma once

// Final-window comparison of training curves. Inputs are per-episode CSVs
// (`*_episodes.csv`, column episode_sum_rate) or sweep aggregates
// (`*_aggregate.csv`, column mean). The algorithm label is the file name up
// to `_seed` or `_aggregate`; files sharing a label are averaged.

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "bibc/errors.hpp"
#include "bibc/harness/config.hpp"

namespace bibc {

struct Curve {
  std::string label;
  std::vector<double> values;   // per episode; NaN marks an infeasible episode
};

inline std::string curve_label(const std::filesystem::path& path) {
  const std::string stem = path.stem().string();
  for (const char* marker : {"_seed", "_aggregate"})
    if (const auto pos = stem.find(marker); pos != std::string::npos) return stem.substr(0, pos);
  return stem;
}

inline Curve read_curve(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ComparisonError("summarize: cannot open " + path.string());
  std::string header;
  if (!std::getline(is, header)) throw ComparisonError("summarize: empty file " + path.string());
  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  auto find = [&](const std::string& name) -> long {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return static_cast<long>(i);
    return -1;
  };
  long value_col = find("episode_sum_rate");
  if (value_col < 0) value_col = find("mean");
  if (value_col < 0 || find("episode") != 0)
    throw ComparisonError("summarize: " + path.string() + " is not an episode or aggregate file");
  const long status_col = find("status");

  Curve curve{curve_label(path), {}};
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string x;
    while (std::getline(ss, x, ',')) f.push_back(x);
    if (f.size() != cols.size()) throw ComparisonError("summarize: ragged row in " + path.string());
    const bool ok = status_col < 0 || f[static_cast<std::size_t>(status_col)] == "ok";
    curve.values.push_back(ok ? detail::parse_double("episode_sum_rate",
                                                     f[static_cast<std::size_t>(value_col)])
                              : std::numeric_limits<double>::quiet_NaN());
  }
  return curve;
}

struct SummaryRow {
  std::string label;
  std::size_t runs = 0;
  double final_mean = 0.0;
  double gain_percent = 0.0;
};

/// Mean of the finite entries among the last `window` episodes.
inline double final_window_mean(const std::vector<double>& v, std::size_t window) {
  const std::size_t start = v.size() > window ? v.size() - window : 0;
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = start; i < v.size(); ++i)
    if (std::isfinite(v[i])) {
      sum += v[i];
      ++n;
    }
  return n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

/// Percentage gain of every label's final-window mean over the baseline's.
inline std::vector<SummaryRow> summarize(const std::vector<Curve>& curves,
                                         const std::string& baseline, std::size_t window = 500) {
  if (curves.empty()) throw ComparisonError("summarize: no input curves");
  const std::size_t E = curves.front().values.size();
  for (const auto& c : curves)
    if (c.values.size() != E)
      throw ComparisonError("summarize: '" + c.label + "' has " + std::to_string(c.values.size()) +
                            " episodes, expected " + std::to_string(E));
  std::map<std::string, std::vector<double>> means;
  std::vector<std::string> order;
  for (const auto& c : curves) {
    if (!means.count(c.label)) order.push_back(c.label);
    means[c.label].push_back(final_window_mean(c.values, window));
  }
  if (!means.count(baseline)) throw ComparisonError("summarize: baseline '" + baseline + "' missing");
  auto avg = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };
  const double base = avg(means[baseline]);
  if (!(base > 0.0)) throw ComparisonError("summarize: baseline mean must be positive");
  std::vector<SummaryRow> rows;
  for (const auto& label : order) {
    const double m = avg(means[label]);
    rows.push_back({label, means[label].size(), m, 100.0 * (m - base) / base});
  }
  return rows;
}

inline std::vector<SummaryRow> summarize_files(const std::vector<std::string>& paths,
                                               const std::string& baseline,
                                               std::size_t window = 500) {
  std::vector<Curve> curves;
  for (const auto& p : paths) curves.push_back(read_curve(p));
  return summarize(curves, baseline, window);
}

inline std::string format_summary(const std::vector<SummaryRow>& rows, const std::string& baseline) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-10s %5s %14s %12s\n", "algorithm", "runs", "final_mean",
                ("gain_vs_" + baseline).c_str());
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-10s %5zu %14.4f %+11.2f%%\n", r.label.c_str(), r.runs,
                  r.final_mean, r.gain_percent);
    os << line;
  }
  return os.str();
}

}  // namespace bibc
