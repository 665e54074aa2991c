#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace twinforge::signals {

inline constexpr double kSampleStep = 5.0;      // s
inline constexpr double kDefaultHorizon = 1400.0;  // s
inline constexpr double kOvenMin = 279.15;      // K, also the cold start value
inline constexpr double kOvenMax = 473.15;      // K

enum class SignalKind { Aprbs, SinAprbs, Multisine, SchroederMultisine, Step, Sine, Concat };

std::string to_string(SignalKind kind);
SignalKind kind_from_string(const std::string& name);

/// Sampled oven-temperature trajectory plus the parameters that produced it.
struct Signal {
  std::string id;
  SignalKind kind = SignalKind::Step;
  std::vector<double> times;   // s, uniform 5 s from 0
  std::vector<double> values;  // K
  nlohmann::json meta = nlohmann::json::object();

  std::size_t size() const { return values.size(); }
  double horizon() const { return times.empty() ? 0.0 : times.back(); }
};

/// Uniform 5 s grid covering [0, horizon].
std::vector<double> sample_times(double horizon);

struct AprbsParams {
  std::uint64_t seed = 0;
  double horizon = kDefaultHorizon;
  double T_min = 293.15;
  double T_max = kOvenMax;
  double t_hold = 300.0;
  double T_margin = 10.0;
};

/// Four-level APRBS by rejection sampling: one level per equidistant band in
/// permuted order with adjacent jumps >= T_margin, and four switch times on
/// the 5 s grid spaced >= t_hold apart and >= t_hold before the horizon.
Signal synth_aprbs(const AprbsParams& params, std::string id = {});

enum class TransitionSpeed { Fast, Slow, Full };

std::string to_string(TransitionSpeed speed);

/// Replace every APRBS level change by a quarter sine; the transition
/// frequency is drawn from [0.001, 0.01] Hz (upper half for Fast, lower half
/// for Slow, whole range for Full).
Signal aprbs_to_sinaprbs(const Signal& aprbs, TransitionSpeed speed, std::string id = {});

struct MultisineParams {
  std::uint64_t seed = 0;
  int m = 4;
  bool schroeder = false;
  std::pair<double, double> f0_range{0.001, 0.01};
  std::pair<double, double> amplitude_range{1.0, 30.0};
  std::pair<double, double> offset_range{330.0, 420.0};
  double horizon = kDefaultHorizon;
};

/// phi_j = -j (j - 1) pi / m, j = 1..m.
std::vector<double> schroeder_phases(int m);

Signal synth_multisine(const MultisineParams& params, std::string id = {});

Signal synth_step(double level, double t_step, double horizon = kDefaultHorizon,
                  std::string id = {});
Signal synth_sine(double amplitude, double frequency, double offset,
                  double horizon = kDefaultHorizon, std::string id = {});

/// Periodic continuation: values[k] = source[k mod (N-1)].
Signal concat_repeat(const Signal& signal, int repeats);

/// Rebuild a signal from its kind and metadata alone.
Signal regenerate(const Signal& signal);

/// `<dir>/<id>.csv` (t_s,T_oven_K) plus `<dir>/<id>.json` metadata.
void write_signal(const std::filesystem::path& dir, const Signal& signal);
Signal read_signal(const std::filesystem::path& dir, const std::string& id);

/// Throws DomainError unless the sampling grid and value range are valid.
void validate(const Signal& signal);

}  // namespace twinforge::signals
