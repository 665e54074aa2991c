#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "twinforge/core_model.hpp"
#include "twinforge/signals.hpp"

namespace twinforge::kpis {

/// Normalization windows used by the coverage measure.
inline constexpr std::pair<double, double> kOvenAxis{279.15, 473.15};
inline constexpr std::pair<double, double> kSurfaceAxis{279.15, 380.0};

struct StepStats {
  double mean_levels;
  double mean_diff_all;         // signed mean of T_diff,i, i = 1..4
  double mean_diff_excl_first;  // signed mean of T_diff,j, j = 2..4
  double mean_abs_diff;         // mean of |T_diff,i|, i = 1..4
};

struct SeriesStats {
  double mean;
  double std;  // population
};

struct KpiRecord {
  std::string signal_id;
  double crest_factor = 0;
  double cv_u = 0;
  double cv_y = 0;
  double cv_uy = 0;
  SeriesStats T_oven{};
  SeriesStats T_A{};
  SeriesStats T_B{};
  std::optional<StepStats> steps;
};

/// max|U_k| / RMS(U) over the raw values.
double crest_factor(std::span<const double> u);

/// Mean nearest-neighbour distance x 100 of the point set, each axis first
/// mapped affinely from its window to [0, 1]. `axes[d]` holds coordinate d
/// of every point.
double coverage(std::span<const std::vector<double>> axes,
                std::span<const std::pair<double, double>> windows);

double coverage_1d(std::span<const double> values, std::pair<double, double> window);
double coverage_2d(std::span<const double> x, std::pair<double, double> wx,
                   std::span<const double> y, std::pair<double, double> wy);

SeriesStats series_stats(std::span<const double> v);

struct SignalStats {
  SeriesStats T_oven;
  SeriesStats T_A;
  SeriesStats T_B;
};

SignalStats signal_stats(const core::SimResult& result);

/// Computed from the level metadata; throws DomainError when absent.
StepStats aprbs_step_stats(const signals::Signal& signal);

KpiRecord compute_kpis(const signals::Signal& signal, const core::SimResult& result);

/// Column names of the KPI export, in order.
std::vector<std::string> kpi_columns();
std::vector<std::string> kpi_row(const KpiRecord& r);

}  // namespace twinforge::kpis
