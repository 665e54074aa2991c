#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "twinforge/kpis.hpp"
#include "twinforge/rom.hpp"

namespace twinforge::eval {

struct MeasureSet {
  double rmse = 0;    // K
  double mape = 0;    // %
  double max = 0;     // K
  double median = 0;  // K, signed
  double iqr = 0;     // K
  double r2 = 0;
};

inline constexpr const char* kMeasureNames[6] = {"RMSE", "MAPE", "MAX", "MEDIAN", "IQR", "R2"};
double measure(const MeasureSet& m, int index);

/// Signed error e = pred - ref. Throws DomainError on length mismatch,
/// fewer than two samples, or a constant reference.
MeasureSet error_measures(std::span<const double> pred, std::span<const double> ref);

/// Quantile by linear interpolation between order statistics at
/// position q (n - 1) of the sorted sample.
double quantile(std::vector<double> values, double q);

MeasureSet aggregate(std::span<const MeasureSet> rows);

struct Chi2Result {
  double statistic;
  double p_value;
  int df;
  bool pass;
  std::vector<int> counts;
};

/// Regularized upper incomplete gamma Q(a, x).
double gamma_q(double a, double x);
/// Upper tail of the chi-square distribution.
double chi2_sf(double statistic, int df);

/// Equal-width binning over `range` (default: min/max of `values`) tested
/// against the uniform expectation N / n_bins with df = n_bins - 1.
Chi2Result chi2_uniformity(std::span<const double> values, int n_bins = 6, double alpha = 0.05,
                           std::optional<std::pair<double, double>> range = std::nullopt);

struct Candidate {
  std::string id;
  double median_tb;
};

struct FairSubset {
  std::vector<std::string> ids;
  Chi2Result chi2;
  int tries;
};

/// Seeded randomized search for a subset whose MEDIAN(T_B) values pass the
/// chi-square uniformity test over the range of the whole pool. Proposals
/// stratify the draw across the bins; the first passing subset wins, else
/// the highest-p subset after `max_tries`. Ids in `exclude` never appear.
FairSubset select_fair_subset(std::span<const Candidate> pool, int size, std::uint64_t seed,
                              std::span<const std::string> exclude = {}, int n_bins = 6,
                              double alpha = 0.05, int max_tries = 5000);

/// Pearson r; nullopt when either column is constant.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct CorrelationTable {
  std::vector<std::string> measures;  // rows
  std::vector<std::string> kpis;      // columns
  std::vector<std::vector<std::optional<double>>> r;

  std::optional<double> at(const std::string& measure, const std::string& kpi) const;
};

/// KPI columns in reporting order.
std::vector<std::string> correlation_kpi_names();
std::optional<double> kpi_value(const kpis::KpiRecord& r, const std::string& name);

/// Rows RMSE..R2 against each KPI column, across ROMs (needs >= 3).
CorrelationTable pearson_table(std::span<const kpis::KpiRecord> kpis,
                               std::span<const MeasureSet> aggregates);

struct RankedRom {
  std::string rom_id;
  std::string kind;
  MeasureSet mean;
};

struct KindSummary {
  std::string kind;
  std::vector<std::string> best_ids;  // ranked, length k
  MeasureSet best_k_mean;
};

/// Sort by mean RMSE ascending, ties by id; return the ranking and per-kind
/// means over the best k ROMs. Throws DomainError for a kind with fewer
/// than k ROMs.
std::pair<std::vector<RankedRom>, std::vector<KindSummary>> rank_and_best_k(
    std::vector<RankedRom> roms, int k);

struct ExtrapolationResult {
  MeasureSet in_window;
  MeasureSet out_of_window;
  bool out_exceeds_in;  // reporting flag, not an assertion
};

/// T_B measures on the first window (t <= window_end) and beyond, from a
/// ROM prediction and the full-order reference on a repeated signal.
ExtrapolationResult extrapolation_measures(const rom::Prediction& pred,
                                           const core::SimResult& reference,
                                           double window_end);

/// Rolls the model out on `signal` repeated `repeats` times and compares
/// with a full-order run of the same repeated signal.
ExtrapolationResult extrapolation_study(const rom::RomModel& model, const signals::Signal& signal,
                                        int repeats, const core::CuboidGrid& grid,
                                        const core::MaterialConstants& mc);

/// ROM-vs-reference measures on the surface temperature T_B.
MeasureSet evaluate_rom(const rom::RomModel& model, const signals::Signal& signal,
                        const core::SimResult& reference);

}  // namespace twinforge::eval
