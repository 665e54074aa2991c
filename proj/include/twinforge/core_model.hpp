#pragma once

/**
 * @file
 * Full-order porous-media cooking model of a meat cuboid.
 *
 * Moisture (molar concentration c) and energy are advanced on a
 * vertex-centred finite-volume grid of the quarter cuboid:
 *
 *   dc/dt + div(c u)              = div(D grad c)
 *   d(rho h)/dt + div(M_w h_w N)  = div(lambda grad T)
 *
 * with Darcy velocity u = -(kappa/mu_w) grad p driven by the swelling
 * pressure p = G'(T) (C - C_eq(T)), N the total molar water flux, and
 * convective heating plus evaporative mass/latent-heat loss on the exterior
 * faces. The energy equation is carried in enthalpy form so the discrete
 * scheme conserves sum(rho h V) exactly in a closed system; with fixed dry
 * mass fractions it reduces to rho c_p dT/dt + rho_w c_p,w u.grad T.
 */

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace twinforge::signals {
struct Signal;
}

namespace twinforge::core {

/// Allowed gap between the wet-basis composition and 1.
inline constexpr double kCompositionTolerance = 0.02;
inline constexpr double kGasConstant = 8.314462618;  // J/(mol K)
inline constexpr double kZeroCelsius = 273.15;        // K
inline constexpr double kOutputStep = 5.0;            // s

struct MaterialConstants {
  double C0 = 0.76;              // initial moisture mass fraction, wet basis
  double T0 = 279.15;            // K
  double rho_eff = 1050.0;       // kg/m^3
  double D_cb = 3e-10;           // m^2/s
  double h_amb_side = 44.0;      // W/(m^2 K), top and sides
  double h_amb_bottom = 50.0;    // W/(m^2 K)
  double H_evap = 2.3e6;         // J/kg
  double T_sigma = 315.0;        // K
  double T_bar = 342.15;         // K
  double Delta_T = 4.0;          // K
  double G_max = 92000.0;        // Pa
  double G_0 = 13500.0;          // Pa
  double kappa = 3e-17;          // m^2
  double mu_w = 0.988e-3;        // Pa s
  double rho_w = 998.0;          // kg/m^3
  double M_w = 0.018015;         // kg/mol
  double Phi_amb = 0.05;         // oven relative humidity
  double p_amb = 101325.0;       // Pa
  double Le = 0.91;              // Lewis number
  double y_protein = 0.21;
  double y_ash = 0.01;
  double y_fat = 0.01;

  /// Throws DomainError when an invariant is violated.
  void validate() const;

  /// Initial molar water concentration c0 = C0 rho / M_w.
  double initial_concentration() const { return C0 * rho_eff / M_w; }

  /// Apply `name = value` overrides; unknown names throw SchemaError.
  void apply_overrides(const std::map<std::string, std::string>& kv);

  /// Canonical `name=value` listing, one per line, in declaration order.
  std::string canonical() const;
};

enum class FaceKind { Symmetry, Exterior };

/// Quarter model of the cuboid on [0, Lx/2] x [0, Ly] x [0, Lz/2].
///
/// Symmetry planes sit at x = 0 and z = 0; the fibre axis is x and y is the
/// vertical (y = 0 bottom, y = Ly top). Nodes sit on cell vertices so that
/// both probes coincide with nodes: A at (0, Ly/2, 0), B at (0, Ly, 0).
struct CuboidGrid {
  double Lx = 0.070, Ly = 0.020, Lz = 0.040;
  int nx = 14, ny = 8, nz = 8;
  // faces: x_min, x_max, y_min (bottom), y_max (top), z_min, z_max
  std::array<FaceKind, 6> faces{FaceKind::Symmetry, FaceKind::Exterior, FaceKind::Exterior,
                                FaceKind::Exterior, FaceKind::Symmetry, FaceKind::Exterior};

  void validate() const;

  double extent(int axis) const;
  int cells(int axis) const;
  double spacing(int axis) const { return extent(axis) / cells(axis); }
  int nodes(int axis) const { return cells(axis) + 1; }
  std::size_t node_count() const;
  std::size_t index(int i, int j, int k) const;
  /// Control-volume width of node `n` along `axis` (half width on the boundary).
  double width(int axis, int n) const;
  double volume(int i, int j, int k) const;

  std::size_t probe_a() const;
  std::size_t probe_b() const;

  /// 1-D slab reduction in y: x and z extremes become adiabatic.
  static CuboidGrid slab(int ny, int nxz = 3);

  std::string canonical() const;
};

struct FieldState {
  std::vector<double> c;  // mol/m^3
  std::vector<double> T;  // K
  double t = 0.0;         // s
};

struct SimResult {
  std::vector<double> times;
  std::vector<double> T_oven;
  std::vector<double> T_A;
  std::vector<double> T_B;
  std::string signal_id;
  std::vector<FieldState> snapshots;  // only when requested
};

// ---------------------------------------------------------------------------
// Material properties

enum Component { kWater = 0, kProtein = 1, kFat = 2, kAsh = 3 };
inline constexpr int kComponents = 4;

struct ComponentProps {
  std::array<double, kComponents> conductivity;   // W/(m K)
  std::array<double, kComponents> specific_heat;  // J/(kg K)
  std::array<double, kComponents> density;        // kg/m^3
};

/// Choi & Okos (1986) property polynomials for 250 K <= T <= 500 K.
ComponentProps choi_okos_component_props(double T);

/// Specific enthalpy of each component (J/kg), antiderivative of the
/// Choi-Okos specific heat referenced to 0 K.
std::array<double, kComponents> component_enthalpy(double T);

struct EffectiveProps {
  double lambda_parallel;
  double lambda_perp;
  double cp;
  std::array<double, kComponents> volume_fraction;
};

/// Mass fractions (water, protein, fat, ash) for wet-basis moisture C; the
/// dry components keep their fixed mass fractions.
std::array<double, kComponents> mass_fractions(double C, const MaterialConstants& mc);

/// Parallel (arithmetic) and serial (harmonic) conductivity mixing plus the
/// mass-weighted specific heat of the given mixture.
EffectiveProps mix_props(const ComponentProps& props,
                         const std::array<double, kComponents>& y);

EffectiveProps effective_props(double C, double T, const MaterialConstants& mc);

struct SwellingPressure {
  double p;
  double C_eq;
  double G_prime;
};

SwellingPressure swelling_pressure(double C, double T, const MaterialConstants& mc);

/// Face-normal Darcy velocities on a grid, one array per axis. Entry
/// (i,j,k) of axis a is the velocity on the face between node (i,j,k) and
/// its +a neighbour; the last layer is the boundary face and is zero.
struct DarcyField {
  std::array<std::vector<double>, 3> u;
};

DarcyField darcy_velocity(const std::vector<double>& p, const MaterialConstants& mc,
                          const CuboidGrid& grid);

/// Saturation vapour pressure of water (Buck 1996), Pa.
double saturation_pressure(double T);

struct EvaporationFlux {
  double m_evap;  // kg/(m^2 s), positive = evaporation
  double a_w;
  double p_sat;
  double beta_ext;
  double beta_skin;
  double beta_tot;
};

EvaporationFlux evaporation_flux(double T_surf, double C_surf, double T_oven, double h_amb,
                                 const MaterialConstants& mc);

// ---------------------------------------------------------------------------
// Solver

struct SolverOptions {
  bool heat_exchange = true;   // h_amb (T_oven - T) on exterior faces
  bool evaporation = true;     // m_evap mass and latent-heat loss
  bool darcy = true;           // swelling-pressure convection
  double dt = 0.0;             // <= 0 selects automatically
  bool keep_snapshots = false;
};

FieldState initial_state(const CuboidGrid& grid, const MaterialConstants& mc);

/// Explicit stability bound of the diffusion operator (s).
double stability_bound(const CuboidGrid& grid, const MaterialConstants& mc);

/// 0.5 x stability bound, capped at 0.5 s, shrunk so it divides 5 s.
double auto_time_step(const CuboidGrid& grid, const MaterialConstants& mc);

/// Advance one explicit Euler step under a constant oven temperature.
FieldState step_fields(const FieldState& state, double T_oven, double dt, const CuboidGrid& grid,
                       const MaterialConstants& mc, const SolverOptions& opts = {});

/// Sum over nodes of c V (mol).
double total_moles(const FieldState& s, const CuboidGrid& grid);

/// Sum over nodes of rho h(T) V (J); the quantity the scheme conserves.
double total_energy(const FieldState& s, const CuboidGrid& grid, const MaterialConstants& mc);

/// Wet-basis moisture mass fraction at a node.
double mass_fraction(const FieldState& s, std::size_t node, const MaterialConstants& mc);

SimResult simulate(const signals::Signal& signal, const CuboidGrid& grid,
                   const MaterialConstants& mc, const SolverOptions& opts = {});

/// Version tag folded into simulation cache keys.
inline constexpr const char* kSolverVersion = "fv-explicit-enthalpy-1";

}  // namespace twinforge::core
