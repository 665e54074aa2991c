#include "twinforge/rom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "twinforge/csv.hpp"
#include "twinforge/error.hpp"
#include "twinforge/rng.hpp"

namespace twinforge::rom {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Network evaluation on raw parameter storage. `hidden_out` receives the
// sigmoid activations when non-null.
void net_forward(const RomModel& m, std::span<const double> theta, const double* state, double u,
                 double* out, double* hidden_out) {
  const int D = m.state_dim();
  const int In = m.input_dim();
  const int H = m.hidden();
  const double* W1 = theta.data() + m.w1_offset();
  const double* b1 = theta.data() + m.b1_offset();
  const double* W2 = theta.data() + m.w2_offset();
  const double* b2 = theta.data() + m.b2_offset();
  double h_local[256];
  double* h = hidden_out ? hidden_out : h_local;
  for (int i = 0; i < H; ++i) {
    const double* row = W1 + i * In;
    double pre = b1[i] + row[D] * u;
    for (int j = 0; j < D; ++j) pre += row[j] * state[j];
    h[i] = sigmoid(pre);
  }
  for (int o = 0; o < D; ++o) {
    const double* row = W2 + o * H;
    double acc = b2[o];
    for (int i = 0; i < H; ++i) acc += row[i] * h[i];
    out[o] = acc;
  }
}

// Backward through one network evaluation. Accumulates parameter gradients
// into `grad` and writes d(loss)/d(state) into `g_state`.
void net_backward(const RomModel& m, std::span<const double> theta, const double* state, double u,
                  const double* hidden, const double* g_out, std::span<double> grad, double* g_state) {
  const int D = m.state_dim();
  const int In = m.input_dim();
  const int H = m.hidden();
  const double* W1 = theta.data() + m.w1_offset();
  const double* W2 = theta.data() + m.w2_offset();
  double* gW1 = grad.data() + m.w1_offset();
  double* gb1 = grad.data() + m.b1_offset();
  double* gW2 = grad.data() + m.w2_offset();
  double* gb2 = grad.data() + m.b2_offset();

  double g_pre[256];
  for (int i = 0; i < H; ++i) g_pre[i] = 0.0;
  for (int o = 0; o < D; ++o) {
    const double g = g_out[o];
    gb2[o] += g;
    double* grow = gW2 + o * H;
    const double* row = W2 + o * H;
    for (int i = 0; i < H; ++i) {
      grow[i] += g * hidden[i];
      g_pre[i] += g * row[i];
    }
  }
  for (int j = 0; j < D; ++j) g_state[j] = 0.0;
  for (int i = 0; i < H; ++i) {
    const double gp = g_pre[i] * hidden[i] * (1.0 - hidden[i]);
    gb1[i] += gp;
    double* grow = gW1 + i * In;
    const double* row = W1 + i * In;
    for (int j = 0; j < D; ++j) {
      grow[j] += gp * state[j];
      g_state[j] += gp * row[j];
    }
    grow[D] += gp * u;
  }
}

struct NormalizedScenario {
  std::vector<double> u;
  std::vector<double> y;  // interleaved (T_A, T_B) per sample
};

NormalizedScenario normalize(const RomModel& m, const Scenario& s) {
  if (s.u.size() < 2 || s.T_A.size() != s.u.size() || s.T_B.size() != s.u.size()) {
    throw DomainError("scenario '" + s.id + "' needs equal-length series of >= 2 samples");
  }
  NormalizedScenario n;
  n.u.reserve(s.u.size());
  n.y.reserve(2 * s.u.size());
  for (std::size_t k = 0; k < s.u.size(); ++k) {
    n.u.push_back(m.input_range.normalize(s.u[k]));
    n.y.push_back(m.state_range.normalize(s.T_A[k]));
    n.y.push_back(m.state_range.normalize(s.T_B[k]));
  }
  return n;
}

// Loss of one scenario over its first `steps` intervals, with the gradient
// accumulated (scaled by `weight`) into `grad` when non-empty.
double scenario_loss(const RomModel& m, std::span<const double> theta, const NormalizedScenario& sc,
                     std::size_t steps, double weight, std::span<double> grad) {
  const int D = m.state_dim();
  const int H = m.hidden();
  const bool backward = !grad.empty();
  const auto Du = static_cast<std::size_t>(D);
  const auto Hu = static_cast<std::size_t>(H);

  std::vector<double> states((steps + 1) * Du, 0.0);
  std::vector<double> stage_in, stage_h;
  if (backward) {
    stage_in.resize(steps * 4 * Du);
    stage_h.resize(steps * 4 * Hu);
  }
  states[0] = sc.y[0];
  states[1] = sc.y[1];

  double k1[64], k2[64], k3[64], k4[64], z[64];
  double sum_sq = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    const double* s = &states[k * Du];
    const double u = sc.u[k];
    double* zin = backward ? &stage_in[(k * 4) * Du] : z;
    double* hid = backward ? &stage_h[(k * 4) * Hu] : nullptr;

    auto stage = [&](int idx, const double* base, const double* kprev, double frac, double* kout) {
      double* zi = backward ? zin + idx * D : z;
      for (int j = 0; j < D; ++j) zi[j] = base[j] + (kprev ? frac * kprev[j] : 0.0);
      net_forward(m, theta, zi, u, kout, backward ? hid + idx * H : nullptr);
    };
    stage(0, s, nullptr, 0.0, k1);
    stage(1, s, k1, 0.5, k2);
    stage(2, s, k2, 0.5, k3);
    stage(3, s, k3, 1.0, k4);

    double* next = &states[(k + 1) * Du];
    for (int j = 0; j < D; ++j) next[j] = s[j] + (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0;
    for (int l = 0; l < kObserved; ++l) {
      const double e = next[l] - sc.y[2 * (k + 1) + static_cast<std::size_t>(l)];
      sum_sq += e * e;
    }
  }
  const double norm = 1.0 / (static_cast<double>(kObserved) * static_cast<double>(steps));
  const double value = sum_sq * norm;
  if (!backward) return value;

  // Reverse sweep through the RK4 steps.
  double g[64], gk1[64], gk2[64], gk3[64], gk4[64], gz[64];
  for (int j = 0; j < D; ++j) g[j] = 0.0;
  for (std::size_t k = steps; k-- > 0;) {
    const double* next = &states[(k + 1) * Du];
    for (int l = 0; l < kObserved; ++l) {
      g[l] += weight * 2.0 * norm * (next[l] - sc.y[2 * (k + 1) + static_cast<std::size_t>(l)]);
    }
    const double u = sc.u[k];
    const double* zin = &stage_in[(k * 4) * Du];
    const double* hid = &stage_h[(k * 4) * Hu];

    for (int j = 0; j < D; ++j) gk4[j] = g[j] / 6.0;
    net_backward(m, theta, zin + 3 * D, u, hid + 3 * H, gk4, grad, gz);
    double acc[64];
    for (int j = 0; j < D; ++j) {
      acc[j] = g[j] + gz[j];
      gk3[j] = g[j] / 3.0 + gz[j];
    }
    net_backward(m, theta, zin + 2 * D, u, hid + 2 * H, gk3, grad, gz);
    for (int j = 0; j < D; ++j) {
      acc[j] += gz[j];
      gk2[j] = g[j] / 3.0 + 0.5 * gz[j];
    }
    net_backward(m, theta, zin + 1 * D, u, hid + 1 * H, gk2, grad, gz);
    for (int j = 0; j < D; ++j) {
      acc[j] += gz[j];
      gk1[j] = g[j] / 6.0 + 0.5 * gz[j];
    }
    net_backward(m, theta, zin, u, hid, gk1, grad, gz);
    for (int j = 0; j < D; ++j) g[j] = acc[j] + gz[j];
  }
  return value;
}

double total_loss(const RomModel& m, std::span<const double> theta,
                  const std::vector<NormalizedScenario>& scs, std::size_t max_steps,
                  std::span<double> grad) {
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
  const double weight = 1.0 / static_cast<double>(scs.size());
  double sum = 0.0;
  for (const auto& sc : scs) {
    const std::size_t steps = std::min(max_steps, sc.u.size() - 1);
    sum += scenario_loss(m, theta, sc, steps, weight, grad);
  }
  return sum * weight;
}

std::vector<NormalizedScenario> normalize_all(const RomModel& m, std::span<const Scenario> scenarios) {
  if (scenarios.empty()) throw DomainError("training needs at least one scenario");
  std::vector<NormalizedScenario> out;
  out.reserve(scenarios.size());
  for (const auto& s : scenarios) out.push_back(normalize(m, s));
  return out;
}

constexpr std::size_t kFullHorizon = static_cast<std::size_t>(-1);

}  // namespace

// ---------------------------------------------------------------------------

RomModel::RomModel(int n_free, int hidden) : n_free_(n_free), hidden_(hidden) {
  if (n_free < 0 || hidden < 1 || hidden > 256 || n_free > 32) {
    throw DomainError("unsupported ROM architecture");
  }
  const std::size_t count = static_cast<std::size_t>(hidden * input_dim() + hidden +
                                                     state_dim() * hidden + state_dim());
  theta_.assign(count, 0.0);
}

void RomModel::initialize(std::uint64_t seed) {
  Rng rng(seed);
  const double a1 = 1.0 / std::sqrt(static_cast<double>(input_dim()));
  const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
  for (std::size_t i = 0; i < w2_offset(); ++i) theta_[i] = rng.uniform(-a1, a1);
  for (std::size_t i = w2_offset(); i < theta_.size(); ++i) theta_[i] = rng.uniform(-a2, a2);
}

void RomModel::validate() const {
  if (hidden_ < 1 || theta_.size() != b2_offset() + static_cast<std::size_t>(state_dim())) {
    throw ModelCorruptError("ROM parameter vector has the wrong shape");
  }
  for (double v : theta_) {
    if (!std::isfinite(v)) throw ModelCorruptError("ROM has non-finite weights");
  }
  if (!(input_range.hi > input_range.lo) || !(state_range.hi > state_range.lo)) {
    throw ModelCorruptError("ROM normalization ranges are empty");
  }
}

std::vector<double> rhs(const RomModel& model, std::span<const double> state, double u) {
  model.validate();
  if (state.size() != static_cast<std::size_t>(model.state_dim())) {
    throw DomainError("state dimension mismatch");
  }
  std::vector<double> out(state.size());
  net_forward(model, model.parameters(), state.data(), u, out.data(), nullptr);
  return out;
}

void rk4_step(const VectorField& f, std::span<double> y, double h) {
  const std::size_t n = y.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
  f(y, k1);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
  f(tmp, k2);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
  f(tmp, k3);
  for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
  f(tmp, k4);
  for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
}

Prediction rollout(const RomModel& model, std::span<const double> u_kelvin,
                   std::array<double, kObserved> x0) {
  model.validate();
  if (u_kelvin.empty()) throw DomainError("rollout needs a non-empty excitation");
  if (!std::isfinite(x0[0]) || !std::isfinite(x0[1])) throw DomainError("initial state is not finite");
  const int D = model.state_dim();
  const auto theta = model.parameters();

  double s[64] = {}, z[64], k1[64], k2[64], k3[64], k4[64];
  s[0] = model.state_range.normalize(x0[0]);
  s[1] = model.state_range.normalize(x0[1]);

  Prediction p;
  p.T_A.reserve(u_kelvin.size());
  p.T_B.reserve(u_kelvin.size());
  p.T_A.push_back(x0[0]);
  p.T_B.push_back(x0[1]);
  for (std::size_t k = 0; k + 1 < u_kelvin.size(); ++k) {
    const double u = model.input_range.normalize(u_kelvin[k]);
    net_forward(model, theta, s, u, k1, nullptr);
    for (int j = 0; j < D; ++j) z[j] = s[j] + 0.5 * k1[j];
    net_forward(model, theta, z, u, k2, nullptr);
    for (int j = 0; j < D; ++j) z[j] = s[j] + 0.5 * k2[j];
    net_forward(model, theta, z, u, k3, nullptr);
    for (int j = 0; j < D; ++j) z[j] = s[j] + k3[j];
    net_forward(model, theta, z, u, k4, nullptr);
    for (int j = 0; j < D; ++j) {
      s[j] += (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) / 6.0;
      // Free states carry no physical scale; only their finiteness is checked.
      const double bound = j < kObserved ? kDivergenceBound : std::numeric_limits<double>::max();
      if (!(std::abs(s[j]) <= bound)) {
        throw RolloutDivergedError("ROM rollout diverged", k + 1);
      }
    }
    p.T_A.push_back(model.state_range.denormalize(s[0]));
    p.T_B.push_back(model.state_range.denormalize(s[1]));
  }
  return p;
}

Prediction rollout(const RomModel& model, const signals::Signal& signal,
                   std::array<double, kObserved> x0) {
  return rollout(model, std::span<const double>(signal.values), x0);
}

Scenario make_scenario(const signals::Signal& signal, const core::SimResult& result) {
  if (result.T_A.size() != signal.size() || result.T_B.size() != signal.size()) {
    throw DomainError("simulation result does not match signal '" + signal.id + "'");
  }
  return {signal.id, signal.values, result.T_A, result.T_B};
}

double loss_and_gradient(const RomModel& model, std::span<const Scenario> scenarios,
                         std::span<double> gradient) {
  model.validate();
  if (gradient.size() != model.parameter_count()) throw DomainError("gradient size mismatch");
  const auto scs = normalize_all(model, scenarios);
  return total_loss(model, model.parameters(), scs, kFullHorizon, gradient);
}

double loss(const RomModel& model, std::span<const Scenario> scenarios) {
  model.validate();
  const auto scs = normalize_all(model, scenarios);
  return total_loss(model, model.parameters(), scs, kFullHorizon, {});
}

void TrainConfig::validate() const {
  if (epochs < 1) throw DomainError("epochs must be >= 1");
  if (hidden < 1) throw DomainError("hidden width must be >= 1");
  if (n_free < 0) throw DomainError("free-state count must be >= 0");
  if (!(learning_rate > 0.0) || !(final_learning_rate > 0.0)) throw DomainError("learning rate must be positive");
  if (!(grad_clip > 0.0)) throw DomainError("gradient clip must be positive");
  if (curriculum_fraction < 0.0 || curriculum_fraction > 1.0) throw DomainError("curriculum fraction outside [0, 1]");
}

TrainResult train(std::span<const Scenario> scenarios, const TrainConfig& config) {
  config.validate();
  RomModel model(config.n_free, config.hidden);
  model.initialize(config.seed);
  return train(std::move(model), scenarios, config);
}

TrainResult train(RomModel model, std::span<const Scenario> scenarios, const TrainConfig& config) {
  config.validate();
  model.validate();
  const auto scs = normalize_all(model, scenarios);
  std::size_t full = 0;
  for (const auto& sc : scs) full = std::max(full, sc.u.size() - 1);

  const std::size_t P = model.parameter_count();
  std::vector<double> grad(P), m1(P, 0.0), m2(P, 0.0);
  auto theta = model.parameters();

  std::vector<double> best(theta.begin(), theta.end());
  double best_loss = total_loss(model, theta, scs, kFullHorizon, {});
  if (!std::isfinite(best_loss)) throw TrainingDivergedError("initial loss is not finite", 0);
  const double initial_loss = best_loss;

  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  const int curriculum_epochs = static_cast<int>(config.curriculum_fraction * config.epochs);

  TrainReport report;
  report.initial_loss = initial_loss;
  report.epoch_loss.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::size_t horizon = kFullHorizon;
    if (config.curriculum_start > 0 && epoch < curriculum_epochs) {
      const double frac = static_cast<double>(epoch) / static_cast<double>(curriculum_epochs);
      const double h0 = static_cast<double>(config.curriculum_start);
      horizon = static_cast<std::size_t>(h0 + frac * (static_cast<double>(full) - h0));
    }
    const double value = total_loss(model, theta, scs, horizon, grad);
    if (!std::isfinite(value)) throw TrainingDivergedError("training loss is not finite", epoch + 1);
    report.epoch_loss.push_back(value);

    if (horizon >= full && value < best_loss) {
      best_loss = value;
      std::copy(theta.begin(), theta.end(), best.begin());
    }
    if (config.early_stop_mse > 0.0 && horizon >= full && value < config.early_stop_mse) {
      report.epochs_run = epoch + 1;
      break;
    }

    double norm2 = 0.0;
    for (double g : grad) norm2 += g * g;
    const double norm = std::sqrt(norm2);
    const double clip = norm > config.grad_clip ? config.grad_clip / norm : 1.0;

    double lr = config.learning_rate;
    if (config.schedule == LrSchedule::Cosine) {
      const double progress = static_cast<double>(epoch) / static_cast<double>(config.epochs);
      lr = config.final_learning_rate +
           0.5 * (config.learning_rate - config.final_learning_rate) * (1.0 + std::cos(M_PI * progress));
    }
    const double c1 = 1.0 - std::pow(beta1, epoch + 1);
    const double c2 = 1.0 - std::pow(beta2, epoch + 1);
    for (std::size_t i = 0; i < P; ++i) {
      const double g = grad[i] * clip;
      m1[i] = beta1 * m1[i] + (1.0 - beta1) * g;
      m2[i] = beta2 * m2[i] + (1.0 - beta2) * g * g;
      theta[i] -= lr * (m1[i] / c1) / (std::sqrt(m2[i] / c2) + eps);
    }
    report.epochs_run = epoch + 1;
  }

  const double last = total_loss(model, theta, scs, kFullHorizon, {});
  if (std::isfinite(last) && last < best_loss) {
    best_loss = last;
    std::copy(theta.begin(), theta.end(), best.begin());
  }
  std::copy(best.begin(), best.end(), theta.begin());
  report.final_loss = best_loss;

  // Per-scenario RMSE in K over both observed states.
  const double scale = model.state_range.scale();
  for (const auto& sc : scs) {
    const double mse = scenario_loss(model, theta, sc, sc.u.size() - 1, 1.0, {});
    report.train_rmse.push_back(std::sqrt(mse) * scale);
  }

  model.provenance.signal_ids.clear();
  for (const auto& s : scenarios) model.provenance.signal_ids.push_back(s.id);
  model.provenance.seed = config.seed;
  model.provenance.final_loss = best_loss;
  return {std::move(model), std::move(report)};
}

double gradient_check(const RomModel& model, const Scenario& scenario, double eps, int n_params,
                      std::uint64_t seed) {
  model.validate();
  if (scenario.u.size() < 2) throw DomainError("gradient check needs a non-empty scenario");
  const Scenario scs[1] = {scenario};
  std::vector<double> grad(model.parameter_count());
  loss_and_gradient(model, scs, grad);

  std::vector<std::size_t> idx(model.parameter_count());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));
  const auto count = std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(n_params, 1)));

  RomModel probe = model;
  double worst = 0.0;
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t i = idx[n];
    const double orig = probe.parameters()[i];
    probe.parameters()[i] = orig + eps;
    const double up = loss(probe, scs);
    probe.parameters()[i] = orig - eps;
    const double down = loss(probe, scs);
    probe.parameters()[i] = orig;
    const double numeric = (up - down) / (2.0 * eps);
    const double denom = std::max({std::abs(numeric), std::abs(grad[i]), 1e-7});
    worst = std::max(worst, std::abs(numeric - grad[i]) / denom);
  }
  return worst;
}

// ---------------------------------------------------------------------------

std::string to_json_text(const RomModel& model) {
  model.validate();
  using nlohmann::json;
  const int D = model.state_dim(), In = model.input_dim(), H = model.hidden();
  const auto th = model.parameters();
  json W1 = json::array(), W2 = json::array();
  for (int i = 0; i < H; ++i) {
    W1.push_back(std::vector<double>(th.begin() + static_cast<long>(model.w1_offset()) + i * In,
                                     th.begin() + static_cast<long>(model.w1_offset()) + (i + 1) * In));
  }
  for (int o = 0; o < D; ++o) {
    W2.push_back(std::vector<double>(th.begin() + static_cast<long>(model.w2_offset()) + o * H,
                                     th.begin() + static_cast<long>(model.w2_offset()) + (o + 1) * H));
  }
  json j;
  j["schema"] = "twinforge.rom";
  j["schema_version"] = kSchemaVersion;
  j["architecture"] = {{"n_obs", kObserved},     {"n_free", model.n_free()}, {"hidden", H},
                       {"activation", "sigmoid"}, {"integrator", "rk4"},      {"excitation_hold", "zoh"}};
  j["dt"] = model.dt;
  j["normalization"] = {{"input", {model.input_range.lo, model.input_range.hi}},
                        {"state", {model.state_range.lo, model.state_range.hi}}};
  j["weights"] = {
      {"W1", W1},
      {"b1", std::vector<double>(th.begin() + static_cast<long>(model.b1_offset()),
                                 th.begin() + static_cast<long>(model.w2_offset()))},
      {"W2", W2},
      {"b2", std::vector<double>(th.begin() + static_cast<long>(model.b2_offset()), th.end())}};
  j["provenance"] = {{"signal_ids", model.provenance.signal_ids},
                     {"seed", model.provenance.seed},
                     {"final_loss", model.provenance.final_loss}};
  return j.dump(1) + "\n";
}

RomModel from_json_text(const std::string& text) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model file is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != "twinforge.rom") {
    throw SchemaError("not a twinforge ROM document");
  }
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
    throw SchemaError("model file lacks an integer schema_version");
  }
  if (j["schema_version"].get<int>() != kSchemaVersion) {
    throw UnsupportedVersionError("unsupported model schema version " +
                                  std::to_string(j["schema_version"].get<int>()));
  }
  try {
    const auto& a = j.at("architecture");
    if (a.at("n_obs").get<int>() != kObserved || a.at("activation").get<std::string>() != "sigmoid") {
      throw SchemaError("unsupported ROM architecture");
    }
    RomModel m(a.at("n_free").get<int>(), a.at("hidden").get<int>());
    m.dt = j.at("dt").get<double>();
    const auto& nrm = j.at("normalization");
    m.input_range = {nrm.at("input")[0].get<double>(), nrm.at("input")[1].get<double>()};
    m.state_range = {nrm.at("state")[0].get<double>(), nrm.at("state")[1].get<double>()};

    const auto& w = j.at("weights");
    const int D = m.state_dim(), In = m.input_dim(), H = m.hidden();
    auto th = m.parameters();
    auto read_matrix = [&](const json& mat, int rows, int cols, std::size_t offset) {
      if (!mat.is_array() || static_cast<int>(mat.size()) != rows) throw SchemaError("weight matrix has wrong shape");
      for (int r = 0; r < rows; ++r) {
        const auto& row = mat[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<int>(row.size()) != cols) throw SchemaError("weight matrix has wrong shape");
        for (int c = 0; c < cols; ++c) {
          const auto& v = row[static_cast<std::size_t>(c)];
          if (!v.is_number()) throw ModelCorruptError("weight is not a finite number");
          th[offset + static_cast<std::size_t>(r * cols + c)] = v.get<double>();
        }
      }
    };
    read_matrix(w.at("W1"), H, In, m.w1_offset());
    read_matrix(json::array({w.at("b1")}), 1, H, m.b1_offset());
    read_matrix(w.at("W2"), D, H, m.w2_offset());
    read_matrix(json::array({w.at("b2")}), 1, D, m.b2_offset());

    const auto& p = j.at("provenance");
    m.provenance.signal_ids = p.at("signal_ids").get<std::vector<std::string>>();
    m.provenance.seed = p.at("seed").get<std::uint64_t>();
    m.provenance.final_loss = p.at("final_loss").get<double>();
    m.validate();
    return m;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed model file: ") + e.what());
  }
}

void save_model(const RomModel& model, const std::filesystem::path& path) {
  csv::write_text(path, to_json_text(model));
}

RomModel load_model(const std::filesystem::path& path) { return from_json_text(csv::read_text(path)); }

}  // namespace twinforge::rom
