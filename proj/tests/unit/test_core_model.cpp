#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "twinforge/core_model.hpp"
#include "twinforge/error.hpp"
#include "twinforge/rng.hpp"
#include "twinforge/signals.hpp"

using namespace twinforge;
using namespace twinforge::core;

namespace {

CuboidGrid small_grid() {
  CuboidGrid g;
  g.nx = 6;
  g.ny = 4;
  g.nz = 4;
  return g;
}

SolverOptions closed() {
  SolverOptions o;
  o.heat_exchange = false;
  o.evaporation = false;
  return o;
}

}  // namespace

TEST_SUITE("core-model") {

TEST_CASE("default constants") {
  MaterialConstants mc;
  CHECK(mc.C0 == 0.76);
  CHECK(mc.T0 == 279.15);
  CHECK(mc.rho_eff == 1050.0);
  CHECK(mc.D_cb == 3e-10);
  CHECK(mc.h_amb_side == 44.0);
  CHECK(mc.h_amb_bottom == 50.0);
  CHECK(mc.G_max == 92000.0);
  CHECK(mc.G_0 == 13500.0);
  CHECK(mc.Phi_amb == 0.05);
  CHECK_NOTHROW(mc.validate());

  auto bad = mc;
  bad.kappa = 0.0;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = mc;
  bad.C0 = 0.9;
  CHECK_THROWS_AS(bad.validate(), DomainError);
  bad = mc;
  bad.y_fat = 1.2;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("constant overrides") {
  MaterialConstants mc;
  mc.apply_overrides({{"h_amb_side", "40"}, {"D_cb", "4e-10"}});
  CHECK(mc.h_amb_side == 40.0);
  CHECK(mc.D_cb == 4e-10);
  CHECK_THROWS_AS(mc.apply_overrides({{"no_such_constant", "1"}}), SchemaError);
  CHECK(MaterialConstants{}.canonical() != mc.canonical());
}

TEST_CASE("grid geometry and probes") {
  CuboidGrid g;
  CHECK(g.extent(0) == doctest::Approx(0.035));
  CHECK(g.extent(1) == doctest::Approx(0.020));
  CHECK(g.extent(2) == doctest::Approx(0.020));
  CHECK(g.node_count() == 15u * 9u * 9u);
  CHECK(g.faces[0] == FaceKind::Symmetry);
  CHECK(g.faces[4] == FaceKind::Symmetry);
  CHECK(g.probe_a() == g.index(0, 4, 0));
  CHECK(g.probe_b() == g.index(0, 8, 0));

  double volume = 0.0;
  for (int k = 0; k < g.nodes(2); ++k)
    for (int j = 0; j < g.nodes(1); ++j)
      for (int i = 0; i < g.nodes(0); ++i) volume += g.volume(i, j, k);
  CHECK(volume == doctest::Approx(0.035 * 0.020 * 0.020).epsilon(1e-12));

  auto bad = g;
  bad.ny = 2;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("Choi-Okos water properties against water tables") {
  const auto p = choi_okos_component_props(293.15);
  CHECK(p.conductivity[kWater] == doctest::Approx(0.60).epsilon(0.05));
  CHECK(p.specific_heat[kWater] == doctest::Approx(4180.0).epsilon(0.03));
  CHECK(p.density[kWater] == doctest::Approx(998.2).epsilon(0.01));
}

TEST_CASE("Choi-Okos positivity and continuity") {
  for (double T = 250.0; T < 500.0; T += 2.5) {
    const auto p = choi_okos_component_props(T);
    for (int c = 0; c < kComponents; ++c) {
      CHECK(p.conductivity[c] > 0.0);
      CHECK(p.specific_heat[c] > 0.0);
      CHECK(p.density[c] > 0.0);
    }
    const auto q = choi_okos_component_props(T + 1e-6);
    for (int c = 0; c < kComponents; ++c) {
      CHECK(std::abs(q.specific_heat[c] - p.specific_heat[c]) < 1e-3);
      CHECK(std::abs(q.conductivity[c] - p.conductivity[c]) < 1e-6);
    }
  }
  CHECK_THROWS_AS(choi_okos_component_props(249.0), DomainError);
  CHECK_THROWS_AS(choi_okos_component_props(501.0), DomainError);
}

TEST_CASE("component enthalpy is the antiderivative of the specific heat") {
  for (double T : {260.0, 300.0, 373.15, 450.0}) {
    const double h = 1e-3;
    const auto up = component_enthalpy(T + h);
    const auto down = component_enthalpy(T - h);
    const auto cp = choi_okos_component_props(T).specific_heat;
    for (int c = 0; c < kComponents; ++c) {
      CHECK((up[c] - down[c]) / (2 * h) == doctest::Approx(cp[c]).epsilon(1e-7));
    }
  }
}

TEST_CASE("mixing rules") {
  SUBCASE("identical components") {
    ComponentProps p{};
    p.conductivity = {0.5, 0.5, 0.5, 0.5};
    p.specific_heat = {1000, 2000, 3000, 4000};
    p.density = {1000, 1300, 900, 2400};
    const auto e = mix_props(p, {0.7, 0.2, 0.05, 0.05});
    CHECK(e.lambda_parallel == doctest::Approx(0.5));
    CHECK(e.lambda_perp == doctest::Approx(0.5));
    CHECK(e.cp == doctest::Approx(0.7 * 1000 + 0.2 * 2000 + 0.05 * 3000 + 0.05 * 4000));
  }
  SUBCASE("two components with equal volume") {
    ComponentProps p{};
    p.conductivity = {1.0, 3.0, 1.0, 1.0};
    p.specific_heat = {1, 1, 1, 1};
    p.density = {1000, 1000, 1000, 1000};
    const auto e = mix_props(p, {0.5, 0.5, 0.0, 0.0});
    CHECK(e.volume_fraction[0] == doctest::Approx(0.5));
    CHECK(e.lambda_parallel == doctest::Approx(2.0));
    CHECK(e.lambda_perp == doctest::Approx(1.5));
  }
  SUBCASE("chicken at 20 C") {
    const auto e = effective_props(0.76, 293.15, MaterialConstants{});
    CHECK(e.lambda_parallel > e.lambda_perp);
    CHECK(e.lambda_parallel >= 0.3);
    CHECK(e.lambda_parallel <= 0.7);
    CHECK(e.lambda_perp >= 0.3);
    CHECK(e.lambda_perp <= 0.7);
    // Independent evaluation of the two means.
    const auto ref = oracle::choi_okos_mix(0.76, 20.0);
    CHECK(e.lambda_parallel == doctest::Approx(ref.lambda_parallel).epsilon(1e-9));
    CHECK(e.lambda_perp == doctest::Approx(ref.lambda_perp).epsilon(1e-9));
    CHECK(e.cp == doctest::Approx(ref.cp).epsilon(1e-9));
  }
}

TEST_CASE("mixing invariants over random states") {
  Rng rng(11);
  const MaterialConstants mc;
  for (int n = 0; n < 500; ++n) {
    const double C = rng.uniform(0.0, 0.76);
    const double T = rng.uniform(250.0, 500.0);
    const auto e = effective_props(C, T, mc);
    double sum = 0.0;
    for (double phi : e.volume_fraction) sum += phi;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(e.lambda_perp <= e.lambda_parallel + 1e-15);
  }
}

TEST_CASE("swelling pressure") {
  const MaterialConstants mc;
  SUBCASE("zero at equilibrium") {
    const double C_eq = swelling_pressure(0.5, 350.0, mc).C_eq;
    CHECK(swelling_pressure(C_eq, 350.0, mc).p == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("sigmoid midpoint") {
    CHECK(swelling_pressure(0.7, mc.T_bar, mc).G_prime == doctest::Approx(52750.0));
  }
  SUBCASE("water holding capacity at T_sigma") {
    CHECK(swelling_pressure(0.7, 315.0, mc).C_eq == doctest::Approx(0.76 - 0.31 / 31.0).epsilon(1e-12));
    CHECK(swelling_pressure(0.7, 315.0, mc).C_eq == doctest::Approx(0.75));
  }
  SUBCASE("ranges") {
    for (double T = 250.0; T <= 500.0; T += 5.0) {
      const auto s = swelling_pressure(0.6, T, mc);
      CHECK(s.C_eq >= mc.C0 - 0.31);
      CHECK(s.C_eq <= mc.C0);
      CHECK(s.G_prime >= mc.G_0);
      CHECK(s.G_prime <= mc.G_max);
      CHECK(s.p == doctest::Approx(s.G_prime * (0.6 - s.C_eq)));
    }
  }
}

TEST_CASE("Darcy velocity") {
  const MaterialConstants mc;
  const auto g = small_grid();
  SUBCASE("uniform pressure") {
    const auto f = darcy_velocity(std::vector<double>(g.node_count(), 5e4), mc, g);
    for (const auto& u : f.u)
      for (double v : u) CHECK(v == 0.0);
  }
  SUBCASE("linear pressure") {
    std::vector<double> p(g.node_count());
    for (int k = 0; k < g.nodes(2); ++k)
      for (int j = 0; j < g.nodes(1); ++j)
        for (int i = 0; i < g.nodes(0); ++i) p[g.index(i, j, k)] = 1e6 * i * g.spacing(0);
    const auto f = darcy_velocity(p, mc, g);
    const double expected = -mc.kappa / mc.mu_w * 1e6;
    CHECK(std::abs(expected) == doctest::Approx(3.04e-8).epsilon(0.01));
    for (int i = 0; i + 1 < g.nodes(0); ++i) {
      CHECK(f.u[0][g.index(i, 1, 1)] == doctest::Approx(expected).epsilon(1e-9));
    }
    // Boundary layer of faces carries no flow.
    CHECK(f.u[0][g.index(g.nodes(0) - 1, 1, 1)] == 0.0);
    for (double v : f.u[1]) CHECK(v == doctest::Approx(0.0));
  }
  CHECK_THROWS_AS(darcy_velocity(std::vector<double>(3), mc, g), DomainError);
}

TEST_CASE("saturation pressure against steam tables") {
  CHECK(saturation_pressure(373.15) == doctest::Approx(101325.0).epsilon(0.02));
  CHECK(saturation_pressure(293.15) == doctest::Approx(2339.0).epsilon(0.02));
  CHECK(saturation_pressure(333.15) == doctest::Approx(19946.0).epsilon(0.02));
}

TEST_CASE("evaporation flux") {
  const MaterialConstants mc;
  SUBCASE("water activity") {
    const auto ev = evaporation_flux(320.0, 0.76, 473.15, 44.0, mc);
    CHECK(ev.a_w == doctest::Approx(1.0 - 0.073 / (0.76 / 0.24)).epsilon(1e-12));
    CHECK(ev.a_w == doctest::Approx(0.9769).epsilon(1e-4));
  }
  SUBCASE("serial combination") {
    Rng rng(5);
    for (int n = 0; n < 200; ++n) {
      const double Ts = rng.uniform(280.0, 420.0);
      const double C = rng.uniform(0.05, 0.76);
      const auto ev = evaporation_flux(Ts, C, rng.uniform(280.0, 473.15), 44.0, mc);
      CHECK(ev.beta_tot <= std::min(ev.beta_ext, ev.beta_skin) * (1 + 1e-12));
      CHECK(1.0 / ev.beta_tot == doctest::Approx(1.0 / ev.beta_ext + 1.0 / ev.beta_skin));
    }
  }
  SUBCASE("dry surface shuts evaporation") {
    double prev = evaporation_flux(373.0, 0.3, 473.15, 44.0, mc).m_evap;
    for (double C : {0.1, 0.03, 0.01, 1e-3, 1e-5}) {
      const auto ev = evaporation_flux(373.0, C, 473.15, 44.0, mc);
      CHECK(ev.beta_skin < 0.05);
      CHECK(ev.m_evap <= prev);
      prev = ev.m_evap;
    }
    CHECK(evaporation_flux(373.0, 1e-9, 473.15, 44.0, mc).beta_tot < 1e-6);
  }
  SUBCASE("clamps") {
    // Cold surface in a humid hot oven would condense.
    auto humid = mc;
    humid.Phi_amb = 0.9;
    CHECK(evaporation_flux(290.0, 0.5, 473.15, 44.0, humid).m_evap < 0.0);
    CHECK(evaporation_flux(290.0, 0.0, 473.15, 44.0, humid).m_evap == 0.0);
    CHECK(evaporation_flux(290.0, 0.04, 473.15, 44.0, humid).m_evap == 0.0);
  }
  CHECK_THROWS_AS(evaporation_flux(350.0, 1.0, 473.15, 44.0, mc), DomainError);
}

TEST_CASE("closed uniform state is an equilibrium") {
  const MaterialConstants mc;
  const auto g = small_grid();
  auto s = initial_state(g, mc);
  const auto s0 = s;
  for (int n = 0; n < 50; ++n) s = step_fields(s, 473.15, 0.5, g, mc, closed());
  for (std::size_t q = 0; q < g.node_count(); ++q) {
    CHECK(s.T[q] == doctest::Approx(s0.T[q]).epsilon(1e-12));
    CHECK(s.c[q] == doctest::Approx(s0.c[q]).epsilon(1e-12));
  }
}

TEST_CASE("closed-system conservation over 1400 s") {
  const MaterialConstants mc;
  const CuboidGrid g;
  auto s = initial_state(g, mc);
  Rng rng(3);
  for (std::size_t q = 0; q < g.node_count(); ++q) {
    s.T[q] = rng.uniform(280.0, 380.0);
    s.c[q] *= rng.uniform(0.7, 1.0);
  }
  const double m0 = total_moles(s, g);
  const double e0 = total_energy(s, g, mc);
  const double dt = auto_time_step(g, mc);
  for (double t = 0; t < 1400.0 - 1e-9; t += dt) {
    s = step_fields(s, 473.15, dt, g, mc, closed());
    CHECK(std::abs(total_moles(s, g) - m0) / m0 < 1e-9);
  }
  CHECK(std::abs(total_energy(s, g, mc) - e0) / std::abs(e0) < 1e-6);
}

TEST_CASE("mirror symmetry in y is preserved") {
  auto mc = MaterialConstants{};
  mc.h_amb_bottom = mc.h_amb_side;
  CuboidGrid g;
  auto s = initial_state(g, mc);
  for (int k = 0; k < g.nodes(2); ++k)
    for (int j = 0; j < g.nodes(1); ++j)
      for (int i = 0; i < g.nodes(0); ++i) {
        const double dy = std::abs(j - g.ny / 2.0);
        s.T[g.index(i, j, k)] = 285.0 + 3.0 * dy + 0.5 * i;
      }
  const double dt = auto_time_step(g, mc);
  for (int n = 0; n < static_cast<int>(1400.0 / dt); ++n) s = step_fields(s, 473.15, dt, g, mc);
  double worst = 0.0;
  for (int k = 0; k < g.nodes(2); ++k)
    for (int j = 0; j < g.nodes(1); ++j)
      for (int i = 0; i < g.nodes(0); ++i) {
        const auto a = g.index(i, j, k), b = g.index(i, g.ny - j, k);
        worst = std::max(worst, std::abs(s.T[a] - s.T[b]) / s.T[a]);
        worst = std::max(worst, std::abs(s.c[a] - s.c[b]) / s.c[a]);
      }
  CHECK(worst < 1e-10);
}

TEST_CASE("step_fields errors") {
  const MaterialConstants mc;
  const auto g = small_grid();
  auto s = initial_state(g, mc);
  s.t = 42.0;
  CHECK_THROWS_AS(step_fields(s, 473.15, 10.0 * stability_bound(g, mc), g, mc), SolverError);
  auto bad = s;
  bad.T[3] = std::nan("");
  try {
    step_fields(bad, 473.15, 0.5, g, mc);
    FAIL("expected a solver error");
  } catch (const SolverError& e) {
    CHECK(e.time() == doctest::Approx(42.0));
  }
  bad = s;
  bad.c.pop_back();
  CHECK_THROWS_AS(step_fields(bad, 473.15, 0.5, g, mc), DomainError);
}

TEST_CASE("auto time step") {
  const MaterialConstants mc;
  const CuboidGrid g;
  const double dt = auto_time_step(g, mc);
  CHECK(dt <= 0.5);
  CHECK(dt <= 0.5 * stability_bound(g, mc) + 1e-12);
  CHECK(std::abs(5.0 / dt - std::round(5.0 / dt)) < 1e-9);
}

TEST_CASE("simulate output contract") {
  const MaterialConstants mc;
  const auto g = small_grid();
  const auto sig = signals::synth_step(400.0, 100.0);
  const auto r = simulate(sig, g, mc);
  REQUIRE(r.times.size() == 281);
  CHECK(r.times.front() == 0.0);
  CHECK(r.times.back() == 1400.0);
  for (std::size_t k = 1; k < r.times.size(); ++k) CHECK(r.times[k] - r.times[k - 1] == 5.0);
  CHECK(r.T_A.front() == mc.T0);
  CHECK(r.T_B.front() == mc.T0);
  CHECK(r.signal_id == sig.id);

  const auto again = simulate(sig, g, mc);
  CHECK(again.T_A == r.T_A);
  CHECK(again.T_B == r.T_B);

  SolverOptions o;
  o.dt = 0.3;
  CHECK_THROWS_AS(simulate(sig, g, mc, o), DomainError);
}

TEST_CASE("near-equilibrium cold oven") {
  auto mc = MaterialConstants{};
  // Oven humidity matched to the surface vapour density.
  const auto ev = evaporation_flux(mc.T0, mc.C0, mc.T0, mc.h_amb_side, mc);
  mc.Phi_amb = ev.a_w * ev.p_sat / mc.p_amb;
  const auto r = simulate(signals::synth_step(mc.T0, 0.0), CuboidGrid{}, mc);
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    CHECK(std::abs(r.T_A[k] - mc.T0) < 0.5);
    CHECK(std::abs(r.T_B[k] - mc.T0) < 0.5);
  }
}

TEST_CASE("full-load cook reaches 74 C in the core before 1200 s") {
  const auto r = simulate(signals::synth_step(473.15, 0.0), CuboidGrid{}, MaterialConstants{});
  double crossing = -1.0;
  for (std::size_t k = 0; k < r.times.size(); ++k) {
    if (r.T_A[k] >= 347.15) {
      crossing = r.times[k];
      break;
    }
  }
  CHECK(crossing > 0.0);
  CHECK(crossing < 1200.0);
}

TEST_CASE("monotone heating without evaporation") {
  SolverOptions o;
  o.evaporation = false;
  const auto r = simulate(signals::synth_step(400.0, 0.0), small_grid(), MaterialConstants{}, o);
  for (std::size_t k = 1; k < r.T_A.size(); ++k) CHECK(r.T_A[k] >= r.T_A[k - 1]);
}

TEST_CASE("surface leads core during heating") {
  // The brute-force 1-D analogue shows the ordering for constant properties.
  const auto slab = oracle::heated_slab(0.020, 40, 1400.0, 473.15, 279.15);
  for (const auto& [surface, center] : slab) CHECK(surface >= center);

  for (double level : {373.15, 473.15}) {
    const auto r = simulate(signals::synth_step(level, 0.0), CuboidGrid{}, MaterialConstants{});
    for (std::size_t k = 0; k < r.T_A.size(); ++k) CHECK(r.T_B[k] >= r.T_A[k]);
  }
}

TEST_CASE("boiling cap at full load") {
  const MaterialConstants mc;
  const CuboidGrid g;
  auto s = initial_state(g, mc);
  const double dt = auto_time_step(g, mc);
  int checked = 0;
  for (double t = 0.0; t < 1400.0; t += dt) {
    if (mass_fraction(s, g.probe_b(), mc) > 0.3) {
      CHECK(s.T[g.probe_b()] <= 380.0);
      ++checked;
    }
    s = step_fields(s, 473.15, dt, g, mc);
  }
  CHECK(checked > 100);
}

TEST_CASE("grid refinement on the 1-D slab") {
  const MaterialConstants mc;
  SolverOptions o;
  o.evaporation = false;
  o.darcy = false;
  const auto sig = signals::synth_step(473.15, 0.0, 1200.0);
  std::vector<double> ta;
  for (int ny : {4, 8, 16, 32}) ta.push_back(simulate(sig, CuboidGrid::slab(ny), mc, o).T_A.back());
  const double e1 = std::abs(ta[1] - ta[0]);
  const double e2 = std::abs(ta[2] - ta[1]);
  const double e3 = std::abs(ta[3] - ta[2]);
  MESSAGE("T_A(1200 s): " << ta[0] << " " << ta[1] << " " << ta[2] << " " << ta[3]);
  CHECK(e1 / e2 >= 1.8);
  CHECK(e2 / e3 >= 1.8);
}

}  // TEST_SUITE
