#include "twinforge/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "twinforge/csv.hpp"
#include "twinforge/error.hpp"
#include "twinforge/signals.hpp"

namespace twinforge::core {

namespace {

constexpr double kMolarMassAir = 0.028966;  // kg/mol
constexpr double kCpAir = 1006.0;           // J/(kg K)
constexpr double kBoiling = 373.15;         // K

// Choi & Okos (1986), t in deg C. Rows: water, protein, fat, ash.
// conductivity W/(m K), specific heat kJ/(kg K), density kg/m^3.
constexpr double kK[kComponents][3] = {
    {0.57109, 1.7625e-3, -6.7036e-6},
    {0.17881, 1.1958e-3, -2.7178e-6},
    {0.18071, -2.7604e-4, -1.7749e-7},
    {0.32962, 1.4011e-3, -2.9069e-6},
};
constexpr double kCp[kComponents][3] = {
    {4.1762, -9.0864e-5, 5.4731e-6},
    {2.0082, 1.2089e-3, -1.3129e-6},
    {1.9842, 1.4733e-3, -4.8008e-6},
    {1.0926, 1.8896e-3, -3.6817e-6},
};
constexpr double kRho[kComponents][3] = {
    {997.18, 3.1439e-3, -3.7574e-3},
    {1329.9, -0.5184, 0.0},
    {925.59, -0.41757, 0.0},
    {2423.8, -0.28063, 0.0},
};

double poly(const double (&a)[3], double t) { return a[0] + t * (a[1] + t * a[2]); }

// Antiderivative of the c_p polynomial in t (kJ/kg), zero at t = 0.
double poly_integral(const double (&a)[3], double t) {
  return t * (a[0] + t * (a[1] / 2.0 + t * a[2] / 3.0));
}

ComponentProps props_unchecked(double T) {
  const double t = T - kZeroCelsius;
  ComponentProps p{};
  for (int i = 0; i < kComponents; ++i) {
    p.conductivity[i] = poly(kK[i], t);
    p.specific_heat[i] = 1000.0 * poly(kCp[i], t);
    p.density[i] = poly(kRho[i], t);
  }
  return p;
}

std::array<double, kComponents> enthalpy_unchecked(double T) {
  const double t = T - kZeroCelsius;
  std::array<double, kComponents> h{};
  for (int i = 0; i < kComponents; ++i) {
    h[i] = 1000.0 * (poly_integral(kCp[i], t) - poly_integral(kCp[i], -kZeroCelsius));
  }
  return h;
}

void check_temperature(double T) {
  if (!(T >= 250.0 && T <= 500.0)) {
    throw DomainError("temperature " + std::to_string(T) + " K outside [250, 500] K");
  }
}

void check_fraction(double C) {
  if (!(C >= 0.0 && C < 1.0)) {
    throw DomainError("moisture mass fraction " + std::to_string(C) + " outside [0, 1)");
  }
}

// Volumetric enthalpy rho h of a node (J/m^3) and its T-derivative rho c_p.
struct NodeEnergy {
  double e;
  double de_dT;
};

NodeEnergy node_energy(double c, double T, const MaterialConstants& mc) {
  const auto h = enthalpy_unchecked(T);
  const auto p = props_unchecked(T);
  const double water = c * mc.M_w;  // kg/m^3
  const double dry[3] = {mc.y_protein * mc.rho_eff, mc.y_fat * mc.rho_eff, mc.y_ash * mc.rho_eff};
  double e = water * h[kWater];
  double de = water * p.specific_heat[kWater];
  for (int i = 0; i < 3; ++i) {
    e += dry[i] * h[i + 1];
    de += dry[i] * p.specific_heat[i + 1];
  }
  return {e, de};
}

double temperature_from_energy(double e, double c, double T_guess, const MaterialConstants& mc) {
  double T = T_guess;
  for (int it = 0; it < 20; ++it) {
    const auto ne = node_energy(c, T, mc);
    const double dT = (e - ne.e) / ne.de_dT;
    T += dT;
    if (std::abs(dT) < 1e-11 * T) break;
  }
  return T;
}

}  // namespace

// ---------------------------------------------------------------------------

void MaterialConstants::validate() const {
  const double positive[] = {T0,      rho_eff, D_cb,  h_amb_side, h_amb_bottom, H_evap,
                             T_sigma, T_bar,   Delta_T, G_max,    G_0,          kappa,
                             mu_w,    rho_w,   M_w,   Phi_amb,    p_amb,        Le};
  for (double v : positive) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("material constants must be positive");
  }
  for (double y : {C0, y_protein, y_ash, y_fat}) {
    if (!(y > 0.0 && y < 1.0)) throw DomainError("mass fractions must lie in (0, 1)");
  }
  // The default composition closes at 0.99; the unlisted remainder is left out of the mix.
  if (std::abs(C0 + y_protein + y_ash + y_fat - 1.0) > kCompositionTolerance) {
    throw DomainError("C0 + y_protein + y_ash + y_fat must be close to 1");
  }
}

namespace {

template <typename F>
void for_each_constant(MaterialConstants& mc, F&& f) {
  f("C0", mc.C0);
  f("T0", mc.T0);
  f("rho_eff", mc.rho_eff);
  f("D_cb", mc.D_cb);
  f("h_amb_side", mc.h_amb_side);
  f("h_amb_bottom", mc.h_amb_bottom);
  f("H_evap", mc.H_evap);
  f("T_sigma", mc.T_sigma);
  f("T_bar", mc.T_bar);
  f("Delta_T", mc.Delta_T);
  f("G_max", mc.G_max);
  f("G_0", mc.G_0);
  f("kappa", mc.kappa);
  f("mu_w", mc.mu_w);
  f("rho_w", mc.rho_w);
  f("M_w", mc.M_w);
  f("Phi_amb", mc.Phi_amb);
  f("p_amb", mc.p_amb);
  f("Le", mc.Le);
  f("y_protein", mc.y_protein);
  f("y_ash", mc.y_ash);
  f("y_fat", mc.y_fat);
}

}  // namespace

void MaterialConstants::apply_overrides(const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    bool found = false;
    for_each_constant(*this, [&](const char* name, double& field) {
      if (key == name) {
        field = csv::parse_double(value);
        found = true;
      }
    });
    if (!found) throw SchemaError("unknown material constant '" + key + "'");
  }
  validate();
}

std::string MaterialConstants::canonical() const {
  std::ostringstream out;
  auto copy = *this;
  for_each_constant(copy, [&](const char* name, double& field) {
    out << name << '=' << csv::format_double(field) << '\n';
  });
  return out.str();
}

// ---------------------------------------------------------------------------

void CuboidGrid::validate() const {
  if (nx < 3 || ny < 3 || nz < 3) throw DomainError("grid needs at least 3 cells per axis");
  if (ny % 2 != 0) throw DomainError("ny must be even so that probe A sits at mid-height");
  if (!(Lx > 0 && Ly > 0 && Lz > 0)) throw DomainError("grid dimensions must be positive");
}

double CuboidGrid::extent(int axis) const {
  switch (axis) {
    case 0: return Lx / 2.0;
    case 1: return Ly;
    default: return Lz / 2.0;
  }
}

int CuboidGrid::cells(int axis) const { return axis == 0 ? nx : (axis == 1 ? ny : nz); }

std::size_t CuboidGrid::node_count() const {
  return static_cast<std::size_t>(nodes(0)) * nodes(1) * nodes(2);
}

std::size_t CuboidGrid::index(int i, int j, int k) const {
  return (static_cast<std::size_t>(k) * nodes(1) + j) * nodes(0) + i;
}

double CuboidGrid::width(int axis, int n) const {
  const double d = spacing(axis);
  return (n == 0 || n == cells(axis)) ? 0.5 * d : d;
}

double CuboidGrid::volume(int i, int j, int k) const {
  return width(0, i) * width(1, j) * width(2, k);
}

std::size_t CuboidGrid::probe_a() const { return index(0, ny / 2, 0); }

std::size_t CuboidGrid::probe_b() const { return index(0, ny, 0); }

CuboidGrid CuboidGrid::slab(int ny_cells, int nxz) {
  CuboidGrid g;
  g.ny = ny_cells;
  g.nx = nxz;
  g.nz = nxz;
  g.faces = {FaceKind::Symmetry, FaceKind::Symmetry, FaceKind::Exterior,
             FaceKind::Exterior, FaceKind::Symmetry, FaceKind::Symmetry};
  return g;
}

std::string CuboidGrid::canonical() const {
  std::ostringstream out;
  out << "Lx=" << csv::format_double(Lx) << "\nLy=" << csv::format_double(Ly)
      << "\nLz=" << csv::format_double(Lz) << "\nnx=" << nx << "\nny=" << ny << "\nnz=" << nz
      << "\nfaces=";
  for (auto f : faces) out << (f == FaceKind::Symmetry ? 'S' : 'E');
  out << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------

ComponentProps choi_okos_component_props(double T) {
  check_temperature(T);
  return props_unchecked(T);
}

std::array<double, kComponents> component_enthalpy(double T) {
  check_temperature(T);
  return enthalpy_unchecked(T);
}

std::array<double, kComponents> mass_fractions(double C, const MaterialConstants& mc) {
  return {C, mc.y_protein, mc.y_fat, mc.y_ash};
}

EffectiveProps mix_props(const ComponentProps& props, const std::array<double, kComponents>& y) {
  EffectiveProps out{};
  double specific_volume = 0.0;
  for (int i = 0; i < kComponents; ++i) specific_volume += y[i] / props.density[i];
  double par = 0.0, inv_perp = 0.0, cp = 0.0;
  for (int i = 0; i < kComponents; ++i) {
    const double phi = (y[i] / props.density[i]) / specific_volume;
    out.volume_fraction[i] = phi;
    par += phi * props.conductivity[i];
    inv_perp += phi / props.conductivity[i];
    cp += y[i] * props.specific_heat[i];
  }
  out.lambda_parallel = par;
  out.lambda_perp = 1.0 / inv_perp;
  out.cp = cp;
  return out;
}

EffectiveProps effective_props(double C, double T, const MaterialConstants& mc) {
  check_fraction(C);
  return mix_props(choi_okos_component_props(T), mass_fractions(C, mc));
}

SwellingPressure swelling_pressure(double C, double T, const MaterialConstants& mc) {
  const double C_eq = mc.C0 - 0.31 / (1.0 + 30.0 * std::exp(-0.17 * (T - mc.T_sigma)));
  const double G = mc.G_max + (mc.G_0 - mc.G_max) / (1.0 + std::exp((T - mc.T_bar) / mc.Delta_T));
  return {G * (C - C_eq), C_eq, G};
}

DarcyField darcy_velocity(const std::vector<double>& p, const MaterialConstants& mc,
                          const CuboidGrid& grid) {
  if (p.size() != grid.node_count()) throw DomainError("pressure field size mismatch");
  DarcyField f;
  const double mobility = mc.kappa / mc.mu_w;
  const int n[3] = {grid.nodes(0), grid.nodes(1), grid.nodes(2)};
  for (int a = 0; a < 3; ++a) {
    auto& u = f.u[a];
    u.assign(grid.node_count(), 0.0);
    const double d = grid.spacing(a);
    for (int k = 0; k < n[2]; ++k)
      for (int j = 0; j < n[1]; ++j)
        for (int i = 0; i < n[0]; ++i) {
          int idx[3] = {i, j, k};
          if (idx[a] + 1 >= n[a]) continue;
          int nb[3] = {i, j, k};
          nb[a] += 1;
          const auto here = grid.index(i, j, k);
          u[here] = -mobility * (p[grid.index(nb[0], nb[1], nb[2])] - p[here]) / d;
        }
  }
  return f;
}

double saturation_pressure(double T) {
  const double t = T - kZeroCelsius;
  return 611.21 * std::exp((18.678 - t / 234.5) * (t / (257.14 + t)));
}

EvaporationFlux evaporation_flux(double T_surf, double C_surf, double T_oven, double h_amb,
                                 const MaterialConstants& mc) {
  if (!(C_surf >= 0.0 && C_surf < 1.0)) {
    throw DomainError("surface moisture fraction must lie in [0, 1)");
  }
  EvaporationFlux f{};
  const double M_db = C_surf / (1.0 - C_surf);
  f.a_w = M_db > 0.0 ? 1.0 - 0.073 / M_db : 0.0;
  f.p_sat = saturation_pressure(T_surf);

  const double rho_amb = mc.p_amb * kMolarMassAir / (kGasConstant * T_oven);
  f.beta_ext = h_amb / (rho_amb * kCpAir) * std::pow(mc.Le, -2.0 / 3.0);
  const double F = 1.0 + 6.0 / (1.0 + std::exp((T_surf - kBoiling) / 2.0));
  f.beta_skin = 0.04 * std::pow(C_surf, F);
  f.beta_tot = (f.beta_skin > 0.0) ? 1.0 / (1.0 / f.beta_ext + 1.0 / f.beta_skin) : 0.0;

  const double deficit = f.a_w * f.p_sat / (kGasConstant * T_surf) -
                         mc.Phi_amb * mc.p_amb / (kGasConstant * T_oven);  // mol/m^3
  f.m_evap = f.beta_tot * deficit * mc.M_w;
  if (C_surf == 0.0 || (deficit < 0.0 && C_surf < 0.05)) f.m_evap = std::max(f.m_evap, 0.0);
  return f;
}

// ---------------------------------------------------------------------------

FieldState initial_state(const CuboidGrid& grid, const MaterialConstants& mc) {
  grid.validate();
  mc.validate();
  FieldState s;
  s.c.assign(grid.node_count(), mc.initial_concentration());
  s.T.assign(grid.node_count(), mc.T0);
  return s;
}

double stability_bound(const CuboidGrid& grid, const MaterialConstants& mc) {
  // Worst case over the operating envelope: wet and dry mixtures between
  // the initial and the maximum oven temperature.
  double alpha_max = 0.0;
  for (double C : {mc.C0, 0.5 * mc.C0, 0.05}) {
    for (double T : {mc.T0, 323.15, 373.15, 423.15, signals::kOvenMax}) {
      const auto e = effective_props(C, T, mc);
      const double rho_cp = mc.rho_eff * e.cp;
      alpha_max = std::max(alpha_max, e.lambda_parallel / rho_cp);
    }
  }
  double sum = 0.0;
  for (int a = 0; a < 3; ++a) sum += 1.0 / (grid.spacing(a) * grid.spacing(a));
  return 1.0 / (2.0 * alpha_max * sum);
}

double auto_time_step(const CuboidGrid& grid, const MaterialConstants& mc) {
  const double dt = std::min(0.5 * stability_bound(grid, mc), 0.5);
  return kOutputStep / std::ceil(kOutputStep / dt - 1e-9);
}

double mass_fraction(const FieldState& s, std::size_t node, const MaterialConstants& mc) {
  return s.c[node] * mc.M_w / mc.rho_eff;
}

FieldState step_fields(const FieldState& state, double T_oven, double dt, const CuboidGrid& grid,
                       const MaterialConstants& mc, const SolverOptions& opts) {
  const std::size_t n = grid.node_count();
  if (state.c.size() != n || state.T.size() != n) throw DomainError("field size mismatch");
  if (!(dt > 0.0) || dt > stability_bound(grid, mc)) {
    throw SolverError("time step outside (0, explicit stability bound]", state.t);
  }
  const int nn[3] = {grid.nodes(0), grid.nodes(1), grid.nodes(2)};

  std::vector<double> lam_par(n), lam_perp(n), pressure(n), h_water(n);
  for (std::size_t q = 0; q < n; ++q) {
    const double C = state.c[q] * mc.M_w / mc.rho_eff;
    const double T = state.T[q];
    if (!(T >= 200.0 && T <= 600.0) || !(C >= 0.0 && C < 1.0)) {
      throw SolverError("field left its valid range", state.t);
    }
    const auto props = props_unchecked(T);
    const auto eff = mix_props(props, mass_fractions(C, mc));
    lam_par[q] = eff.lambda_parallel;
    lam_perp[q] = eff.lambda_perp;
    pressure[q] = swelling_pressure(C, T, mc).p;
    h_water[q] = enthalpy_unchecked(T)[kWater];
  }

  std::vector<double> dmol(n, 0.0), denergy(n, 0.0);  // rates, mol/s and W
  const double mobility = opts.darcy ? mc.kappa / mc.mu_w : 0.0;

  // Interior faces.
  for (int a = 0; a < 3; ++a) {
    const double d = grid.spacing(a);
    const int b1 = (a + 1) % 3, b2 = (a + 2) % 3;
    for (int k = 0; k < nn[2]; ++k)
      for (int j = 0; j < nn[1]; ++j)
        for (int i = 0; i < nn[0]; ++i) {
          const int idx[3] = {i, j, k};
          if (idx[a] + 1 >= nn[a]) continue;
          int nb[3] = {i, j, k};
          nb[a] += 1;
          const auto p = grid.index(i, j, k);
          const auto q = grid.index(nb[0], nb[1], nb[2]);
          const double area = grid.width(b1, idx[b1]) * grid.width(b2, idx[b2]);

          const double u = -mobility * (pressure[q] - pressure[p]) / d;
          const double flux_mol =
              u * (u > 0.0 ? state.c[p] : state.c[q]) - mc.D_cb * (state.c[q] - state.c[p]) / d;
          const double lam = a == 0 ? 0.5 * (lam_par[p] + lam_par[q])
                                    : 0.5 * (lam_perp[p] + lam_perp[q]);
          const double h_up = flux_mol > 0.0 ? h_water[p] : h_water[q];
          const double flux_e = -lam * (state.T[q] - state.T[p]) / d + flux_mol * mc.M_w * h_up;

          dmol[p] -= flux_mol * area;
          dmol[q] += flux_mol * area;
          denergy[p] -= flux_e * area;
          denergy[q] += flux_e * area;
        }
  }

  // Exterior faces: convective heating and evaporation.
  if (opts.heat_exchange || opts.evaporation) {
    for (int f = 0; f < 6; ++f) {
      if (grid.faces[f] != FaceKind::Exterior) continue;
      const int a = f / 2;
      const int layer = (f % 2 == 0) ? 0 : grid.cells(a);
      const double h_amb = (f == 2) ? mc.h_amb_bottom : mc.h_amb_side;
      const int b1 = (a + 1) % 3, b2 = (a + 2) % 3;
      for (int s2 = 0; s2 < nn[b2]; ++s2)
        for (int s1 = 0; s1 < nn[b1]; ++s1) {
          int idx[3];
          idx[a] = layer;
          idx[b1] = s1;
          idx[b2] = s2;
          const auto p = grid.index(idx[0], idx[1], idx[2]);
          const double area = grid.width(b1, s1) * grid.width(b2, s2);
          double q_in = 0.0;
          if (opts.heat_exchange) q_in += h_amb * (T_oven - state.T[p]);
          if (opts.evaporation) {
            const double C = state.c[p] * mc.M_w / mc.rho_eff;
            const auto ev = evaporation_flux(state.T[p], C, T_oven, h_amb, mc);
            q_in -= ev.m_evap * (mc.H_evap + h_water[p]);
            dmol[p] -= ev.m_evap / mc.M_w * area;
          }
          denergy[p] += q_in * area;
        }
    }
  }

  FieldState next;
  next.c.resize(n);
  next.T.resize(n);
  next.t = state.t + dt;
  for (int k = 0; k < nn[2]; ++k)
    for (int j = 0; j < nn[1]; ++j)
      for (int i = 0; i < nn[0]; ++i) {
        const auto p = grid.index(i, j, k);
        const double V = grid.volume(i, j, k);
        next.c[p] = state.c[p] + dt * dmol[p] / V;
        const double e_old = node_energy(state.c[p], state.T[p], mc).e;
        const double e_new = e_old + dt * denergy[p] / V;
        next.T[p] = temperature_from_energy(e_new, next.c[p], state.T[p], mc);
        if (!std::isfinite(next.T[p]) || !std::isfinite(next.c[p])) {
          throw SolverError("non-finite field value", next.t);
        }
        if (next.c[p] < 0.0) throw SolverError("negative moisture concentration", next.t);
      }
  return next;
}

double total_moles(const FieldState& s, const CuboidGrid& grid) {
  double sum = 0.0;
  for (int k = 0; k < grid.nodes(2); ++k)
    for (int j = 0; j < grid.nodes(1); ++j)
      for (int i = 0; i < grid.nodes(0); ++i) sum += s.c[grid.index(i, j, k)] * grid.volume(i, j, k);
  return sum;
}

double total_energy(const FieldState& s, const CuboidGrid& grid, const MaterialConstants& mc) {
  double sum = 0.0;
  for (int k = 0; k < grid.nodes(2); ++k)
    for (int j = 0; j < grid.nodes(1); ++j)
      for (int i = 0; i < grid.nodes(0); ++i) {
        const auto p = grid.index(i, j, k);
        sum += node_energy(s.c[p], s.T[p], mc).e * grid.volume(i, j, k);
      }
  return sum;
}

SimResult simulate(const signals::Signal& signal, const CuboidGrid& grid,
                   const MaterialConstants& mc, const SolverOptions& opts) {
  signals::validate(signal);
  const double dt = opts.dt > 0.0 ? opts.dt : auto_time_step(grid, mc);
  const double ratio = kOutputStep / dt;
  const auto substeps = static_cast<long>(std::llround(ratio));
  if (substeps < 1 || std::abs(ratio - static_cast<double>(substeps)) > 1e-9) {
    throw DomainError("solver time step must divide the 5 s output step");
  }

  SimResult r;
  r.signal_id = signal.id;
  r.times = signal.times;
  r.T_oven = signal.values;
  r.T_A.reserve(signal.size());
  r.T_B.reserve(signal.size());

  auto state = initial_state(grid, mc);
  const auto a = grid.probe_a();
  const auto b = grid.probe_b();
  for (std::size_t k = 0; k < signal.size(); ++k) {
    r.T_A.push_back(state.T[a]);
    r.T_B.push_back(state.T[b]);
    if (opts.keep_snapshots) r.snapshots.push_back(state);
    if (k + 1 == signal.size()) break;
    const double T_oven = signal.values[k];
    for (long s = 0; s < substeps; ++s) {
      state = step_fields(state, T_oven, dt, grid, mc, opts);
    }
    state.t = signal.times[k + 1];
  }
  return r;
}

}  // namespace twinforge::core
