#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "doctest.h"
#include "twinforge/csv.hpp"
#include "twinforge/error.hpp"
#include "twinforge/rng.hpp"
#include "twinforge/rom.hpp"

using namespace twinforge;
using namespace twinforge::rom;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

signals::Signal aprbs(std::uint64_t seed) {
  signals::AprbsParams p;
  p.seed = seed;
  return signals::synth_aprbs(p);
}

// Scenario produced by a model of the same family.
Scenario teacher_scenario(const RomModel& teacher, const signals::Signal& sig) {
  const auto pred = rollout(teacher, sig, {300.0, 310.0});
  return {"teacher", sig.values, pred.T_A, pred.T_B};
}

// Random weights plus one restoring unit per state: observed states relax
// towards the excitation, free states towards zero.
RomModel stable_model(int n_free, int hidden, std::uint64_t seed) {
  RomModel m(n_free, hidden);
  m.initialize(seed);
  auto th = m.parameters();
  const int in = m.input_dim(), n = m.state_dim();
  for (std::size_t q = m.w2_offset(); q < th.size(); ++q) th[q] *= 0.05;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < in; ++j) th[i * in + j] = 0.0;
    th[i * in + i] = -1.0;
    if (i < kObserved) th[i * in + n] = 1.0;
    th[m.b1_offset() + i] = 0.0;
    th[m.w2_offset() + i * hidden + i] = 0.4;
    th[m.b2_offset() + i] = -0.2;
  }
  return m;
}

RomModel small_teacher() { return stable_model(0, 4, 99); }

Scenario fom_scenario(std::uint64_t seed) {
  const auto sig = aprbs(seed);
  return make_scenario(sig, core::simulate(sig, core::CuboidGrid{}, core::MaterialConstants{}));
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "twinforge-test-rom";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("rom") {

TEST_CASE("architecture and normalization") {
  RomModel m(2, 16);
  CHECK(m.state_dim() == 4);
  CHECK(m.input_dim() == 5);
  CHECK(m.parameter_count() == 16u * 5u + 16u + 4u * 16u + 4u);
  CHECK(m.input_range.normalize(279.15) == doctest::Approx(-1.0));
  CHECK(m.input_range.normalize(473.15) == doctest::Approx(1.0));
  CHECK(m.state_range.normalize(380.0) == doctest::Approx(1.0));
  CHECK(m.state_range.denormalize(m.state_range.normalize(333.3)) == doctest::Approx(333.3));
  CHECK_THROWS_AS(RomModel(2, 0), DomainError);
  CHECK_THROWS_AS(RomModel(-1, 4), DomainError);
}

TEST_CASE("initialization bounds") {
  RomModel m(2, 16);
  m.initialize(5);
  const auto th = m.parameters();
  const double b1 = 1.0 / std::sqrt(5.0), b2 = 1.0 / std::sqrt(16.0);
  for (std::size_t q = 0; q < m.w2_offset(); ++q) CHECK(std::abs(th[q]) <= b1);
  for (std::size_t q = m.w2_offset(); q < th.size(); ++q) CHECK(std::abs(th[q]) <= b2);
  RomModel again(2, 16);
  again.initialize(5);
  CHECK(std::equal(th.begin(), th.end(), again.parameters().begin()));
}

TEST_CASE("zero weights give a zero derivative and a constant rollout") {
  RomModel m(2, 8);
  Rng rng(1);
  for (int n = 0; n < 50; ++n) {
    const std::vector<double> s{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2)};
    for (double d : rhs(m, s, rng.uniform(-2, 2))) CHECK(d == 0.0);
  }
  const auto p = rollout(m, aprbs(2), {290.0, 300.0});
  REQUIRE(p.T_A.size() == 281);
  for (std::size_t k = 0; k < p.T_A.size(); ++k) {
    CHECK(p.T_A[k] == doctest::Approx(290.0).epsilon(1e-14));
    CHECK(p.T_B[k] == doctest::Approx(300.0).epsilon(1e-14));
  }
}

TEST_CASE("rhs matches a direct evaluation and is pure") {
  RomModel m(2, 6);
  m.initialize(3);
  const std::vector<double> s{0.1, -0.4, 0.7, 0.2};
  const double u = 0.3;
  const auto out = rhs(m, s, u);
  CHECK(out == rhs(m, s, u));

  const auto th = m.parameters();
  const std::vector<double> x{s[0], s[1], s[2], s[3], u};
  std::vector<double> hid(6);
  for (int h = 0; h < 6; ++h) {
    double a = th[m.b1_offset() + h];
    for (int j = 0; j < 5; ++j) a += th[h * 5 + j] * x[j];
    hid[h] = sigmoid(a);
  }
  for (int i = 0; i < 4; ++i) {
    double y = th[m.b2_offset() + i];
    for (int h = 0; h < 6; ++h) y += th[m.w2_offset() + i * 6 + h] * hid[h];
    CHECK(out[i] == doctest::Approx(y).epsilon(1e-14));
  }

  // d out_i / d W2[i][h] = hid_h and d out_i / d W1[h][j] = W2[i][h] s'(a_h) x_j.
  const double eps = 1e-6;
  for (int h = 0; h < 6; ++h) {
    RomModel p = m;
    p.parameters()[p.w2_offset() + 1 * 6 + h] += eps;
    CHECK(std::abs((rhs(p, s, u)[1] - out[1]) - eps * hid[h]) < 1e-6 * eps);

    RomModel q = m;
    q.parameters()[h * 5 + 4] += eps;
    const double partial = th[m.w2_offset() + 2 * 6 + h] * hid[h] * (1.0 - hid[h]) * u;
    CHECK(std::abs((rhs(q, s, u)[2] - out[2]) - eps * partial) < 1e-6 * eps);
  }
}

TEST_CASE("non-finite weights are rejected") {
  RomModel m(2, 4);
  m.initialize(1);
  m.parameters()[3] = std::nan("");
  CHECK_THROWS_AS(m.validate(), ModelCorruptError);
  CHECK_THROWS_AS(rhs(m, std::vector<double>(4, 0.0), 0.0), ModelCorruptError);
}

TEST_CASE("RK4 on the decaying exponential") {
  const VectorField decay = [](std::span<const double> y, std::span<double> d) { d[0] = -y[0]; };
  std::vector<double> y{1.0};
  for (int k = 0; k < 10; ++k) rk4_step(decay, y, 0.1);
  CHECK(std::abs(y[0] - std::exp(-1.0)) < 1e-6);
  CHECK(y[0] == doctest::Approx(0.367879).epsilon(1e-6));
}

TEST_CASE("RK4 is fourth order") {
  const double lambda = 0.05, horizon = 100.0;
  const VectorField decay = [&](std::span<const double> y, std::span<double> d) { d[0] = -lambda * y[0]; };
  std::vector<double> err;
  for (double h : {5.0, 2.5, 1.25}) {
    std::vector<double> y{1.0};
    for (int k = 0; k < static_cast<int>(std::lround(horizon / h)); ++k) rk4_step(decay, y, h);
    err.push_back(std::abs(y[0] - std::exp(-lambda * horizon)));
  }
  CHECK(err[0] / err[1] == doctest::Approx(16.0).epsilon(0.2));
  CHECK(err[1] / err[2] == doctest::Approx(16.0).epsilon(0.2));
}

TEST_CASE("rollout divergence") {
  RomModel m(2, 4);
  m.parameters()[m.b2_offset()] = 1.0;  // T_A grows one normalized unit per step
  try {
    rollout(m, aprbs(1), {300.0, 300.0});
    FAIL("expected divergence");
  } catch (const RolloutDivergedError& e) {
    CHECK(e.step() == 11);
  }
  CHECK_THROWS_AS(rollout(RomModel(2, 4), aprbs(1), {NAN, 300.0}), DomainError);
}

TEST_CASE("gradient agrees with central differences") {
  RomModel m(2, 16);
  m.initialize(4);
  auto sc = fom_scenario(3);
  sc.u.resize(60);
  sc.T_A.resize(60);
  sc.T_B.resize(60);
  const double err = gradient_check(m, sc, 1e-5, 60);
  MESSAGE("max relative gradient error " << err);
  CHECK(err < 1e-4);

  Scenario empty{"empty", {}, {}, {}};
  CHECK_THROWS(gradient_check(m, empty, 1e-5));
  Scenario single{"one", {400.0}, {300.0}, {300.0}};
  CHECK_THROWS(gradient_check(m, single, 1e-5));
}

TEST_CASE("central differences converge at second order") {
  RomModel m(2, 8);
  m.initialize(8);
  auto sc = fom_scenario(5);
  sc.u.resize(40);
  sc.T_A.resize(40);
  sc.T_B.resize(40);
  const double e1 = gradient_check(m, sc, 2e-2, 50, 3);
  const double e2 = gradient_check(m, sc, 4e-2, 50, 3);
  MESSAGE("relative error at eps and 2 eps: " << e1 << " " << e2);
  CHECK(e2 / e1 == doctest::Approx(4.0).epsilon(0.25));
}

TEST_CASE("loss is the normalized observed-state MSE") {
  RomModel m(2, 4);  // zero weights: constant prediction
  Scenario sc{"s", {400.0, 400.0, 400.0}, {300.0, 310.0, 320.0}, {300.0, 300.0, 330.0}};
  const double s = m.state_range.scale();
  const double ref = ((10.0 / s) * (10.0 / s) + (20.0 / s) * (20.0 / s) + (30.0 / s) * (30.0 / s)) / (2.0 * 2.0);
  CHECK(loss(m, std::span<const Scenario>(&sc, 1)) == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("constant scenario is learned within 200 epochs") {
  Scenario sc{"flat", std::vector<double>(281, 400.0), std::vector<double>(281, 320.0),
              std::vector<double>(281, 330.0)};
  TrainConfig cfg;
  cfg.epochs = 200;
  cfg.learning_rate = 1e-2;
  cfg.final_learning_rate = 1e-2;
  const auto r = train(std::span<const Scenario>(&sc, 1), cfg);
  MESSAGE("initial " << r.report.initial_loss << ", final " << r.report.final_loss);
  // Below 1e-4 the pooled error is under 0.5 K.
  CHECK(r.report.final_loss < 1e-4);
  CHECK(r.report.final_loss < 1e-5 * r.report.initial_loss);
}

TEST_CASE("self-consistency: a same-family target is recovered") {
  const auto teacher = small_teacher();
  const auto sc = teacher_scenario(teacher, aprbs(12));
  TrainConfig cfg;
  cfg.n_free = 0;
  cfg.hidden = 4;
  cfg.epochs = 100000;
  cfg.learning_rate = 1e-2;
  cfg.final_learning_rate = 1e-6;
  cfg.schedule = LrSchedule::Cosine;
  cfg.seed = 3;
  const auto r = train(std::span<const Scenario>(&sc, 1), cfg);
  MESSAGE("self-consistency RMSE " << r.report.train_rmse[0] << " K");
  CHECK(r.report.train_rmse[0] < 0.05);
}

TEST_CASE("one-signal training on simulated APRBS scenarios") {
  // Trainer settings of configs/default.conf.
  TrainConfig cfg;
  cfg.epochs = 6000;
  cfg.learning_rate = 1e-2;
  cfg.final_learning_rate = 1e-4;
  cfg.schedule = LrSchedule::Cosine;
  cfg.curriculum_start = 20;
  cfg.curriculum_fraction = 0.3;
  std::vector<double> rmse;
  for (std::uint64_t seed = 7; seed < 12; ++seed) {
    const auto sc = fom_scenario(seed);
    cfg.seed = seed;
    const auto r = train(std::span<const Scenario>(&sc, 1), cfg);
    CHECK(r.report.final_loss <= r.report.epoch_loss.front());
    CHECK(r.model.provenance.signal_ids == std::vector<std::string>{sc.id});
    rmse.push_back(r.report.train_rmse[0]);
    MESSAGE(sc.id << " training RMSE " << rmse.back() << " K");
  }
  std::sort(rmse.begin(), rmse.end());
  CHECK(rmse[2] <= 0.5);
}

TEST_CASE("loss decreases under the shipped trainer settings") {
  // Trainer settings of configs/small.conf.
  const auto sig = aprbs(31);
  core::CuboidGrid g;
  g.nx = 6;
  g.ny = 4;
  g.nz = 4;
  const auto sc = make_scenario(sig, core::simulate(sig, g, core::MaterialConstants{}));
  TrainConfig cfg;
  cfg.epochs = 400;
  cfg.learning_rate = 1e-2;
  cfg.final_learning_rate = 1e-4;
  cfg.schedule = LrSchedule::Cosine;
  const auto r = train(std::span<const Scenario>(&sc, 1), cfg);
  CHECK(r.report.epochs_run == 400);
  CHECK(r.report.epoch_loss.size() == 400);
  CHECK(r.report.epoch_loss.back() <= r.report.epoch_loss.front());
  CHECK(r.report.final_loss <= r.report.epoch_loss.front());
}

TEST_CASE("training is deterministic given the seed") {
  const auto sc = teacher_scenario(small_teacher(), aprbs(4));
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.seed = 11;
  const auto a = train(std::span<const Scenario>(&sc, 1), cfg);
  const auto b = train(std::span<const Scenario>(&sc, 1), cfg);
  CHECK(std::equal(a.model.parameters().begin(), a.model.parameters().end(), b.model.parameters().begin()));
  CHECK(a.report.epoch_loss == b.report.epoch_loss);
  cfg.seed = 12;
  const auto c = train(std::span<const Scenario>(&sc, 1), cfg);
  CHECK_FALSE(std::equal(a.model.parameters().begin(), a.model.parameters().end(), c.model.parameters().begin()));
}

TEST_CASE("training errors") {
  TrainConfig cfg;
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), DomainError);
  cfg = TrainConfig{};
  CHECK_THROWS_AS(train(std::span<const Scenario>(), cfg), DomainError);

  Scenario sc{"flat", std::vector<double>(20, 400.0), std::vector<double>(20, 320.0),
              std::vector<double>(20, 330.0)};
  cfg.learning_rate = 1e300;
  cfg.grad_clip = 1e300;
  cfg.epochs = 20;
  CHECK_THROWS_AS(train(std::span<const Scenario>(&sc, 1), cfg), TrainingDivergedError);
}

TEST_CASE("rollout determinism and speed") {
  const auto m = stable_model(2, 16, 6);
  const auto sig = aprbs(9);
  const auto a = rollout(m, sig, {280.0, 281.0});
  const auto b = rollout(m, sig, {280.0, 281.0});
  CHECK(a.T_A == b.T_A);
  CHECK(a.T_B == b.T_B);

  const int reps = 200;
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) rollout(m, sig, {280.0, 281.0});
  const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count() / reps;
  MESSAGE("280-step rollout " << ms << " ms");
  CHECK(ms < 10.0);
}

TEST_CASE("free states are exchangeable") {
  const auto m = stable_model(2, 8, 17);
  RomModel p = m;
  const int in = m.input_dim(), hid = m.hidden();
  auto th = p.parameters();
  const auto src = m.parameters();
  // Swap free states 0 and 1 (state indices 2 and 3) in every layer.
  for (int h = 0; h < hid; ++h) std::swap(th[h * in + 2], th[h * in + 3]);
  for (int h = 0; h < hid; ++h) {
    th[p.w2_offset() + 2 * hid + h] = src[m.w2_offset() + 3 * hid + h];
    th[p.w2_offset() + 3 * hid + h] = src[m.w2_offset() + 2 * hid + h];
  }
  std::swap(th[p.b2_offset() + 2], th[p.b2_offset() + 3]);

  const auto sig = aprbs(10);
  const auto a = rollout(m, sig, {290.0, 295.0});
  const auto b = rollout(p, sig, {290.0, 295.0});
  for (std::size_t k = 0; k < a.T_A.size(); ++k) {
    CHECK(b.T_A[k] == doctest::Approx(a.T_A[k]).epsilon(1e-12));
    CHECK(b.T_B[k] == doctest::Approx(a.T_B[k]).epsilon(1e-12));
  }
}

TEST_CASE("save and load") {
  auto m = stable_model(2, 16, 21);
  m.provenance.signal_ids = {"ap001"};
  m.provenance.seed = 21;
  m.provenance.final_loss = 1.25e-4;
  const auto path = scratch("model.json");
  save_model(m, path);
  const auto r = load_model(path);
  CHECK(r.n_free() == 2);
  CHECK(r.hidden() == 16);
  CHECK(r.provenance.signal_ids == m.provenance.signal_ids);
  CHECK(r.provenance.final_loss == m.provenance.final_loss);
  CHECK(std::equal(r.parameters().begin(), r.parameters().end(), m.parameters().begin()));
  const auto sig = aprbs(22);
  CHECK(rollout(r, sig, {290.0, 290.0}).T_B == rollout(m, sig, {290.0, 290.0}).T_B);

  const auto text = to_json_text(m);
  CHECK_THROWS_AS(from_json_text(text.substr(0, text.size() / 2)), SchemaError);

  auto doc = nlohmann::json::parse(text);
  doc["schema_version"] = 99;
  CHECK_THROWS_AS(from_json_text(doc.dump()), UnsupportedVersionError);

  doc = nlohmann::json::parse(text);
  doc["weights"]["b1"][0] = "x";
  CHECK_THROWS_AS(from_json_text(doc.dump()), ModelCorruptError);

  doc = nlohmann::json::parse(text);
  doc["weights"]["W2"].erase(0);
  CHECK_THROWS_AS(from_json_text(doc.dump()), SchemaError);

  CHECK_THROWS_AS(load_model(scratch("missing.json")), IoError);
}

}  // TEST_SUITE
