#pragma once

/**
 * @file
 * Neural-ODE reduced-order model.
 *
 * The state s = (X, I) holds the normalized observed temperatures X = (T_A,
 * T_B) and i free states I. Its derivative per 5 s sample step is a
 * one-hidden-layer network
 *
 *   ds/dk = W2 sigmoid(W1 [s; u] + b1) + b2
 *
 * integrated with classic RK4 at a step of one sample, the excitation u held
 * at its left sample value. I(0) = 0.
 */

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "twinforge/core_model.hpp"
#include "twinforge/signals.hpp"

namespace twinforge::rom {

inline constexpr int kObserved = 2;
inline constexpr int kSchemaVersion = 1;

/// Affine map of [lo, hi] onto [-1, 1].
struct AffineRange {
  double lo;
  double hi;
  double normalize(double v) const { return 2.0 * (v - lo) / (hi - lo) - 1.0; }
  double denormalize(double z) const { return lo + 0.5 * (z + 1.0) * (hi - lo); }
  double scale() const { return 0.5 * (hi - lo); }  // K per normalized unit
};

struct Provenance {
  std::vector<std::string> signal_ids;
  std::uint64_t seed = 0;
  double final_loss = 0.0;
};

class RomModel {
 public:
  RomModel() = default;
  RomModel(int n_free, int hidden);

  int n_free() const { return n_free_; }
  int hidden() const { return hidden_; }
  int state_dim() const { return kObserved + n_free_; }
  int input_dim() const { return state_dim() + 1; }
  std::size_t parameter_count() const { return theta_.size(); }

  // Flat parameter layout: W1 (hidden x input, row-major), b1, W2 (state x
  // hidden, row-major), b2.
  std::span<double> parameters() { return theta_; }
  std::span<const double> parameters() const { return theta_; }
  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const { return static_cast<std::size_t>(hidden_ * input_dim()); }
  std::size_t w2_offset() const { return b1_offset() + hidden_; }
  std::size_t b2_offset() const { return w2_offset() + static_cast<std::size_t>(state_dim() * hidden_); }

  /// Uniform in +-1/sqrt(fan_in) per layer from the project RNG.
  void initialize(std::uint64_t seed);

  AffineRange input_range{signals::kOvenMin, signals::kOvenMax};
  AffineRange state_range{279.15, 380.0};
  double dt = 5.0;
  Provenance provenance;

  /// Throws ModelCorruptError on non-finite parameters or bad shape.
  void validate() const;

 private:
  int n_free_ = 0;
  int hidden_ = 0;
  std::vector<double> theta_;
};

/// Network right-hand side at a normalized state and excitation.
std::vector<double> rhs(const RomModel& model, std::span<const double> state, double u);

/// One classic RK4 step of dy/dt = f(y).
using VectorField = std::function<void(std::span<const double> y, std::span<double> dydt)>;
void rk4_step(const VectorField& f, std::span<double> y, double h);

struct Prediction {
  std::vector<double> T_A;
  std::vector<double> T_B;
};

inline constexpr double kDivergenceBound = 10.0;

/// RK4 rollout over every interval of the excitation, starting from the
/// observed temperatures X0 = (T_A, T_B) in K. Throws RolloutDivergedError
/// once a normalized observed state exceeds 10 in magnitude or a free state
/// turns non-finite.
Prediction rollout(const RomModel& model, std::span<const double> u_kelvin,
                   std::array<double, kObserved> x0);
Prediction rollout(const RomModel& model, const signals::Signal& signal,
                   std::array<double, kObserved> x0);

/// A training trajectory in physical units.
struct Scenario {
  std::string id;
  std::vector<double> u;    // T_oven, K
  std::vector<double> T_A;  // K
  std::vector<double> T_B;  // K
};

Scenario make_scenario(const signals::Signal& signal, const core::SimResult& result);

/// Mean over scenarios of the normalized observed-state MSE
/// (1/n) sum_l (1/N) sum_j (X_lj - Y_lj)^2, with its exact gradient by
/// backpropagation through the RK4 rollout.
double loss_and_gradient(const RomModel& model, std::span<const Scenario> scenarios,
                         std::span<double> gradient);
double loss(const RomModel& model, std::span<const Scenario> scenarios);

enum class LrSchedule { Constant, Cosine };

struct TrainConfig {
  int epochs = 3000;
  double learning_rate = 1e-3;
  double final_learning_rate = 1e-3;  // cosine schedule end point
  LrSchedule schedule = LrSchedule::Constant;
  std::uint64_t seed = 1;
  int hidden = 16;
  int n_free = 2;
  double early_stop_mse = 0.0;  // normalized units; 0 disables
  double grad_clip = 10.0;
  /// Training horizons grow from this many steps to the full rollout over
  /// the first `curriculum_fraction` of the epochs; 0 trains on full rollouts
  /// from the start.
  int curriculum_start = 0;
  double curriculum_fraction = 0.0;

  void validate() const;
};

struct TrainReport {
  std::vector<double> epoch_loss;  // normalized MSE after each update's forward pass
  std::vector<double> train_rmse;  // K, per scenario, observed states pooled
  int epochs_run = 0;
  double initial_loss = 0.0;  // full-horizon loss at the starting parameters
  double final_loss = 0.0;    // full-horizon loss of the returned parameters
};

struct TrainResult {
  RomModel model;
  TrainReport report;
};

/// Full-batch Adam on the rollout MSE. Deterministic given the seed.
TrainResult train(std::span<const Scenario> scenarios, const TrainConfig& config);
/// Continue training an existing model.
TrainResult train(RomModel model, std::span<const Scenario> scenarios, const TrainConfig& config);

/// Max relative error between the backpropagated gradient and central
/// differences over `n_params` randomly chosen parameters.
double gradient_check(const RomModel& model, const Scenario& scenario, double eps,
                      int n_params = 50, std::uint64_t seed = 7);

void save_model(const RomModel& model, const std::filesystem::path& path);
RomModel load_model(const std::filesystem::path& path);

std::string to_json_text(const RomModel& model);
RomModel from_json_text(const std::string& text);

}  // namespace twinforge::rom
