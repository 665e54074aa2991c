#include "twinforge/kpis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "twinforge/csv.hpp"
#include "twinforge/error.hpp"

namespace twinforge::kpis {

double crest_factor(std::span<const double> u) {
  if (u.empty()) throw DomainError("crest factor of an empty series");
  double peak = 0.0, sq = 0.0;
  for (double v : u) {
    peak = std::max(peak, std::abs(v));
    sq += v * v;
  }
  if (peak == 0.0) throw DomainError("crest factor undefined for an all-zero series");
  return peak / std::sqrt(sq / static_cast<double>(u.size()));
}

double coverage(std::span<const std::vector<double>> axes,
                std::span<const std::pair<double, double>> windows) {
  if (axes.empty() || axes.size() != windows.size()) throw DomainError("coverage axes/windows mismatch");
  const std::size_t n = axes[0].size();
  if (n < 2) throw DomainError("coverage needs at least two points");
  const std::size_t dims = axes.size();
  std::vector<double> pts(n * dims);
  for (std::size_t d = 0; d < dims; ++d) {
    if (axes[d].size() != n) throw DomainError("coverage axes differ in length");
    const auto [lo, hi] = windows[d];
    for (std::size_t k = 0; k < n; ++k) {
      const double v = axes[d][k];
      if (!std::isfinite(v)) throw DomainError("coverage point is not finite");
      pts[k * dims + d] = (v - lo) / (hi - lo);
    }
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < n; ++m) {
      if (m == k) continue;
      double d2 = 0.0;
      for (std::size_t d = 0; d < dims; ++d) {
        const double diff = pts[k * dims + d] - pts[m * dims + d];
        d2 += diff * diff;
      }
      best = std::min(best, d2);
    }
    sum += std::sqrt(best);
  }
  return 100.0 * sum / static_cast<double>(n);
}

double coverage_1d(std::span<const double> values, std::pair<double, double> window) {
  const std::vector<double> axes[1] = {{values.begin(), values.end()}};
  const std::pair<double, double> w[1] = {window};
  return coverage(axes, w);
}

double coverage_2d(std::span<const double> x, std::pair<double, double> wx, std::span<const double> y,
                   std::pair<double, double> wy) {
  const std::vector<double> axes[2] = {{x.begin(), x.end()}, {y.begin(), y.end()}};
  const std::pair<double, double> w[2] = {wx, wy};
  return coverage(axes, w);
}

SeriesStats series_stats(std::span<const double> v) {
  if (v.empty()) throw DomainError("statistics of an empty series");
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  return {mean, std::sqrt(var / static_cast<double>(v.size()))};
}

SignalStats signal_stats(const core::SimResult& r) {
  return {series_stats(r.T_oven), series_stats(r.T_A), series_stats(r.T_B)};
}

StepStats aprbs_step_stats(const signals::Signal& signal) {
  using signals::SignalKind;
  if (signal.kind != SignalKind::Aprbs && signal.kind != SignalKind::SinAprbs) {
    throw DomainError("step statistics need an APRBS or sinAPRBS signal");
  }
  if (!signal.meta.contains("levels")) throw DomainError("signal '" + signal.id + "' has no level metadata");
  const auto levels = signal.meta.at("levels").get<std::vector<double>>();
  if (levels.size() < 2) throw DomainError("level metadata too short");

  std::vector<double> diffs;
  double prev = signals::kOvenMin;
  for (double level : levels) {
    diffs.push_back(level - prev);
    prev = level;
  }
  StepStats s{};
  double sum_levels = 0, sum_all = 0, sum_abs = 0, sum_excl = 0;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    sum_levels += levels[i];
    sum_all += diffs[i];
    sum_abs += std::abs(diffs[i]);
    if (i > 0) sum_excl += diffs[i];
  }
  const auto n = static_cast<double>(levels.size());
  s.mean_levels = sum_levels / n;
  s.mean_diff_all = sum_all / n;
  s.mean_diff_excl_first = sum_excl / (n - 1.0);
  s.mean_abs_diff = sum_abs / n;
  return s;
}

KpiRecord compute_kpis(const signals::Signal& signal, const core::SimResult& result) {
  KpiRecord r;
  r.signal_id = signal.id;
  r.crest_factor = crest_factor(result.T_oven);
  r.cv_u = coverage_1d(result.T_oven, kOvenAxis);
  r.cv_y = coverage_1d(result.T_B, kSurfaceAxis);
  r.cv_uy = coverage_2d(result.T_oven, kOvenAxis, result.T_B, kSurfaceAxis);
  const auto st = signal_stats(result);
  r.T_oven = st.T_oven;
  r.T_A = st.T_A;
  r.T_B = st.T_B;
  if (signal.kind == signals::SignalKind::Aprbs || signal.kind == signals::SignalKind::SinAprbs) {
    r.steps = aprbs_step_stats(signal);
  }
  return r;
}

std::vector<std::string> kpi_columns() {
  return {"signal_id",   "crest_factor", "cv_u",        "cv_y",        "cv_uy",
          "mean_T_oven", "std_T_oven",   "mean_T_A",    "std_T_A",     "mean_T_B",
          "std_T_B",     "mean_levels",  "mean_diff_all", "mean_diff_excl_first", "mean_abs_diff"};
}

std::vector<std::string> kpi_row(const KpiRecord& r) {
  using csv::format_double;
  std::vector<std::string> row = {r.signal_id,
                                  format_double(r.crest_factor),
                                  format_double(r.cv_u),
                                  format_double(r.cv_y),
                                  format_double(r.cv_uy),
                                  format_double(r.T_oven.mean),
                                  format_double(r.T_oven.std),
                                  format_double(r.T_A.mean),
                                  format_double(r.T_A.std),
                                  format_double(r.T_B.mean),
                                  format_double(r.T_B.std)};
  if (r.steps) {
    row.push_back(format_double(r.steps->mean_levels));
    row.push_back(format_double(r.steps->mean_diff_all));
    row.push_back(format_double(r.steps->mean_diff_excl_first));
    row.push_back(format_double(r.steps->mean_abs_diff));
  } else {
    row.insert(row.end(), 4, "");
  }
  return row;
}

}  // namespace twinforge::kpis
