#include "twinforge/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "twinforge/error.hpp"
#include "twinforge/rng.hpp"

namespace twinforge::eval {

double measure(const MeasureSet& m, int index) {
  switch (index) {
    case 0: return m.rmse;
    case 1: return m.mape;
    case 2: return m.max;
    case 3: return m.median;
    case 4: return m.iqr;
    case 5: return m.r2;
    default: throw DomainError("measure index out of range");
  }
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DomainError("quantile of an empty sample");
  if (q < 0.0 || q > 1.0) throw DomainError("quantile level outside [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

MeasureSet error_measures(std::span<const double> pred, std::span<const double> ref) {
  if (pred.size() != ref.size()) throw DomainError("prediction and reference differ in length");
  if (ref.size() < 2) throw DomainError("error measures need at least two samples");
  const auto n = static_cast<double>(ref.size());
  std::vector<double> e(ref.size());
  double sse = 0, ape = 0, mx = 0, mean_ref = 0;
  for (std::size_t k = 0; k < ref.size(); ++k) {
    if (ref[k] == 0.0) throw DomainError("reference contains zero; MAPE undefined");
    e[k] = pred[k] - ref[k];
    sse += e[k] * e[k];
    ape += std::abs(e[k]) / std::abs(ref[k]);
    mx = std::max(mx, std::abs(e[k]));
    mean_ref += ref[k];
  }
  mean_ref /= n;
  double sst = 0;
  for (double y : ref) sst += (y - mean_ref) * (y - mean_ref);
  if (sst == 0.0) throw DomainError("constant reference; R2 undefined");

  MeasureSet m;
  m.rmse = std::sqrt(sse / n);
  m.mape = 100.0 * ape / n;
  m.max = mx;
  m.median = quantile(e, 0.5);
  m.iqr = quantile(e, 0.75) - quantile(e, 0.25);
  m.r2 = 1.0 - sse / sst;
  return m;
}

MeasureSet aggregate(std::span<const MeasureSet> rows) {
  if (rows.empty()) throw DomainError("aggregate of an empty set");
  MeasureSet a;
  for (const auto& r : rows) {
    a.rmse += r.rmse;
    a.mape += r.mape;
    a.max += r.max;
    a.median += r.median;
    a.iqr += r.iqr;
    a.r2 += r.r2;
  }
  const auto n = static_cast<double>(rows.size());
  a.rmse /= n;
  a.mape /= n;
  a.max /= n;
  a.median /= n;
  a.iqr /= n;
  a.r2 /= n;
  return a;
}

// Regularized incomplete gamma: series for P when x < a + 1, Lentz continued
// fraction for Q otherwise.
double gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0 || !std::isfinite(x)) throw DomainError("gamma_q arguments out of domain");
  if (x == 0.0) return 1.0;
  const double log_prefix = a * std::log(x) - x - std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 10000; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return 1.0 - sum * std::exp(log_prefix);
  }
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::exp(log_prefix) * h;
}

double chi2_sf(double statistic, int df) {
  if (df < 1) throw DomainError("chi-square needs df >= 1");
  if (statistic < 0.0) throw DomainError("negative chi-square statistic");
  return gamma_q(0.5 * df, 0.5 * statistic);
}

Chi2Result chi2_uniformity(std::span<const double> values, int n_bins, double alpha,
                           std::optional<std::pair<double, double>> range) {
  if (n_bins < 2) throw DomainError("chi-square needs at least two bins");
  if (values.size() < static_cast<std::size_t>(n_bins)) throw DomainError("fewer values than bins");
  double lo, hi;
  if (range) {
    std::tie(lo, hi) = *range;
  } else {
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    lo = *mn;
    hi = *mx;
  }
  if (!(hi > lo)) throw DomainError("degenerate binning range");

  Chi2Result r{};
  r.counts.assign(static_cast<std::size_t>(n_bins), 0);
  for (double v : values) {
    auto bin = static_cast<long>(std::floor((v - lo) / (hi - lo) * n_bins));
    bin = std::clamp(bin, 0L, static_cast<long>(n_bins - 1));
    ++r.counts[static_cast<std::size_t>(bin)];
  }
  const double expected = static_cast<double>(values.size()) / n_bins;
  for (int c : r.counts) r.statistic += (c - expected) * (c - expected) / expected;
  r.df = n_bins - 1;
  r.p_value = chi2_sf(r.statistic, r.df);
  r.pass = r.p_value > alpha;
  return r;
}

FairSubset select_fair_subset(std::span<const Candidate> pool, int size, std::uint64_t seed,
                              std::span<const std::string> exclude, int n_bins, double alpha,
                              int max_tries) {
  if (size < n_bins) throw DomainError("subset smaller than the bin count");
  const std::set<std::string> excluded(exclude.begin(), exclude.end());
  std::vector<Candidate> eligible;
  for (const auto& c : pool) {
    if (!excluded.count(c.id)) eligible.push_back(c);
  }
  if (eligible.size() < static_cast<std::size_t>(size)) throw DomainError("candidate pool too small");
  std::sort(eligible.begin(), eligible.end(), [](const auto& a, const auto& b) { return a.id < b.id; });

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : eligible) {
    lo = std::min(lo, c.median_tb);
    hi = std::max(hi, c.median_tb);
  }
  if (!(hi > lo)) throw DomainError("degenerate candidate pool");
  const std::pair<double, double> range{lo, hi};

  std::vector<std::vector<std::size_t>> bins(static_cast<std::size_t>(n_bins));
  for (std::size_t i = 0; i < eligible.size(); ++i) {
    auto b = static_cast<long>(std::floor((eligible[i].median_tb - lo) / (hi - lo) * n_bins));
    b = std::clamp(b, 0L, static_cast<long>(n_bins - 1));
    bins[static_cast<std::size_t>(b)].push_back(i);
  }

  Rng rng(seed);
  FairSubset best{};
  best.chi2.p_value = -1.0;
  for (int attempt = 1; attempt <= max_tries; ++attempt) {
    // Quotas: size / n_bins per bin, remainder to random bins.
    std::vector<int> quota(static_cast<std::size_t>(n_bins), size / n_bins);
    std::vector<std::size_t> order(static_cast<std::size_t>(n_bins));
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    for (int r = 0; r < size % n_bins; ++r) ++quota[order[static_cast<std::size_t>(r)]];

    std::vector<char> taken(eligible.size(), 0);
    std::vector<std::size_t> chosen;
    int deficit = 0;
    for (std::size_t b = 0; b < bins.size(); ++b) {
      auto members = bins[b];
      rng.shuffle(std::span<std::size_t>(members));
      const auto take = std::min<std::size_t>(members.size(), static_cast<std::size_t>(quota[b]));
      deficit += quota[b] - static_cast<int>(take);
      for (std::size_t i = 0; i < take; ++i) {
        chosen.push_back(members[i]);
        taken[members[i]] = 1;
      }
    }
    if (deficit > 0) {
      std::vector<std::size_t> rest;
      for (std::size_t i = 0; i < eligible.size(); ++i) {
        if (!taken[i]) rest.push_back(i);
      }
      rng.shuffle(std::span<std::size_t>(rest));
      chosen.insert(chosen.end(), rest.begin(), rest.begin() + deficit);
    }

    std::vector<double> medians;
    for (auto i : chosen) medians.push_back(eligible[i].median_tb);
    const auto chi2 = chi2_uniformity(medians, n_bins, alpha, range);
    if (chi2.p_value > best.chi2.p_value) {
      best.ids.clear();
      for (auto i : chosen) best.ids.push_back(eligible[i].id);
      std::sort(best.ids.begin(), best.ids.end());
      best.chi2 = chi2;
      best.tries = attempt;
    }
    if (chi2.pass) break;
  }
  return best;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DomainError("pearson columns differ in length");
  if (x.size() < 3) throw DomainError("pearson needs at least three points");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::optional<double> CorrelationTable::at(const std::string& m, const std::string& k) const {
  const auto mi = std::find(measures.begin(), measures.end(), m);
  const auto ki = std::find(kpis.begin(), kpis.end(), k);
  if (mi == measures.end() || ki == kpis.end()) throw DomainError("unknown correlation cell " + m + "/" + k);
  return r[static_cast<std::size_t>(mi - measures.begin())][static_cast<std::size_t>(ki - kpis.begin())];
}

std::vector<std::string> correlation_kpi_names() {
  return {"mean_levels", "mean_diff_all", "mean_diff_excl_first", "mean_abs_diff",
          "mean_T_oven", "std_T_oven",    "crest_factor",         "cv_u",
          "cv_y",        "cv_uy",         "std_T_A",              "std_T_B"};
}

std::optional<double> kpi_value(const kpis::KpiRecord& r, const std::string& name) {
  if (name == "crest_factor") return r.crest_factor;
  if (name == "cv_u") return r.cv_u;
  if (name == "cv_y") return r.cv_y;
  if (name == "cv_uy") return r.cv_uy;
  if (name == "mean_T_oven") return r.T_oven.mean;
  if (name == "std_T_oven") return r.T_oven.std;
  if (name == "mean_T_A") return r.T_A.mean;
  if (name == "std_T_A") return r.T_A.std;
  if (name == "mean_T_B") return r.T_B.mean;
  if (name == "std_T_B") return r.T_B.std;
  if (name == "mean_levels" || name == "mean_diff_all" || name == "mean_diff_excl_first" ||
      name == "mean_abs_diff") {
    if (!r.steps) return std::nullopt;
    if (name == "mean_levels") return r.steps->mean_levels;
    if (name == "mean_diff_all") return r.steps->mean_diff_all;
    if (name == "mean_diff_excl_first") return r.steps->mean_diff_excl_first;
    return r.steps->mean_abs_diff;
  }
  throw DomainError("unknown KPI '" + name + "'");
}

CorrelationTable pearson_table(std::span<const kpis::KpiRecord> kpis,
                               std::span<const MeasureSet> aggregates) {
  if (kpis.size() != aggregates.size()) throw DomainError("KPI and measure rows differ in count");
  if (kpis.size() < 3) throw DomainError("correlation needs at least three ROMs");
  CorrelationTable t;
  t.measures.assign(std::begin(kMeasureNames), std::end(kMeasureNames));
  t.kpis = correlation_kpi_names();
  for (int mi = 0; mi < 6; ++mi) {
    std::vector<double> y;
    for (const auto& a : aggregates) y.push_back(measure(a, mi));
    std::vector<std::optional<double>> row;
    for (const auto& k : t.kpis) {
      std::vector<double> x;
      bool complete = true;
      for (const auto& rec : kpis) {
        const auto v = kpi_value(rec, k);
        if (!v) {
          complete = false;
          break;
        }
        x.push_back(*v);
      }
      row.push_back(complete ? pearson(x, y) : std::nullopt);
    }
    t.r.push_back(std::move(row));
  }
  return t;
}

std::pair<std::vector<RankedRom>, std::vector<KindSummary>> rank_and_best_k(std::vector<RankedRom> roms,
                                                                            int k) {
  if (k < 1) throw DomainError("k must be >= 1");
  std::sort(roms.begin(), roms.end(), [](const RankedRom& a, const RankedRom& b) {
    if (a.mean.rmse != b.mean.rmse) return a.mean.rmse < b.mean.rmse;
    return a.rom_id < b.rom_id;
  });
  std::set<std::string> kinds;
  for (const auto& r : roms) kinds.insert(r.kind);
  std::vector<KindSummary> summaries;
  for (const auto& kind : kinds) {
    KindSummary s{kind, {}, {}};
    std::vector<MeasureSet> rows;
    for (const auto& r : roms) {
      if (r.kind != kind || static_cast<int>(rows.size()) == k) continue;
      s.best_ids.push_back(r.rom_id);
      rows.push_back(r.mean);
    }
    if (static_cast<int>(rows.size()) < k) {
      throw DomainError("kind '" + kind + "' has fewer than " + std::to_string(k) + " ROMs");
    }
    s.best_k_mean = aggregate(rows);
    summaries.push_back(std::move(s));
  }
  return {std::move(roms), std::move(summaries)};
}

ExtrapolationResult extrapolation_measures(const rom::Prediction& pred, const core::SimResult& reference,
                                           double window_end) {
  if (pred.T_B.size() != reference.T_B.size() || reference.times.size() != reference.T_B.size()) {
    throw DomainError("prediction and reference differ in length");
  }
  std::vector<double> pin, rin, pout, rout;
  for (std::size_t k = 0; k < reference.times.size(); ++k) {
    if (reference.times[k] <= window_end) {
      pin.push_back(pred.T_B[k]);
      rin.push_back(reference.T_B[k]);
    } else {
      pout.push_back(pred.T_B[k]);
      rout.push_back(reference.T_B[k]);
    }
  }
  if (pout.empty()) throw DomainError("nothing beyond the training window");
  ExtrapolationResult r;
  r.in_window = error_measures(pin, rin);
  r.out_of_window = error_measures(pout, rout);
  r.out_exceeds_in = r.out_of_window.rmse >= r.in_window.rmse;
  return r;
}

ExtrapolationResult extrapolation_study(const rom::RomModel& model, const signals::Signal& signal,
                                        int repeats, const core::CuboidGrid& grid,
                                        const core::MaterialConstants& mc) {
  if (repeats < 2) throw DomainError("extrapolation needs at least two repeats");
  const auto repeated = signals::concat_repeat(signal, repeats);
  const auto reference = core::simulate(repeated, grid, mc);
  const auto pred = rom::rollout(model, repeated, {reference.T_A.front(), reference.T_B.front()});
  return extrapolation_measures(pred, reference, signal.times.back());
}

MeasureSet evaluate_rom(const rom::RomModel& model, const signals::Signal& signal,
                        const core::SimResult& reference) {
  if (reference.T_B.size() != signal.size()) throw DomainError("reference does not match signal");
  const auto pred = rom::rollout(model, signal, {reference.T_A.front(), reference.T_B.front()});
  return error_measures(pred.T_B, reference.T_B);
}

}  // namespace twinforge::eval
