#pragma once

#include <array>
#include <functional>
#include <vector>

#include "hkq/group.hpp"

namespace hkq {

// Discretized Nahm equations on [0,1]:
//   dT_i/ds + [T_0, T_i] + [T_j, T_k] = 0,  (i,j,k) cyclic in (1,2,3),
// for quadruples T = (T_0,..,T_3) of g-valued functions. Solutions modulo the
// based gauge group realize T^*G^C; points are represented here by solution
// paths, and equality of quotient points is tested through the charts.

struct NahmPath {
  GroupSpec group;
  int n = 0;  // grid intervals; n+1 uniform samples on [0,1]
  // samples[s][i] = T_i(s/n)
  std::vector<std::array<AlgebraElement, 4>> samples;

  double step() const { return 1.0 / n; }
};

struct GaugePath {
  GroupSpec group;
  std::vector<GroupElement> g;        // samples of g(s)
  std::vector<AlgebraElement> dlog;   // samples of g'(s) g(s)^{-1}
  bool based = false;                 // g(0) = g(1) = 1 within tolerance
};

struct CotangentPoint {
  GroupSpec group;
  GroupElement Q;      // in G^C
  AlgebraElement eta;  // in g^C
};

using GaugeProfile = std::function<double(double)>;

// --- integration ----------------------------------------------------------------

// Classical RK4 for the initial value problem with prescribed T_0(s).
// Throws when the solution norm exceeds the blowup bound before s = 1.
NahmPath nahm_integrate(const std::array<AlgebraElement, 3>& t_init,
                        const std::function<AlgebraElement(double)>& t0_profile,
                        int grid_n, double blowup = 1e6);

// Constant path from commuting (or arbitrary, residual-checked) data.
NahmPath constant_path(const GroupSpec& g, const std::array<AlgebraElement, 4>& t,
                       int grid_n);

// Max defect of the equations over interior grid points (five-point stencil
// derivative where available).
double nahm_residual(const NahmPath& p);

// --- gauge action -----------------------------------------------------------------

// g . T = (Ad_g T_0 + g (d/ds) g^{-1}, Ad_g T_1, Ad_g T_2, Ad_g T_3).
NahmPath gauge_act(const GaugePath& g, const NahmPath& p);

// Gauge path exp(phi1(s) xi1) * exp(phi2(s) xi2) with exact log-derivative;
// profiles vanishing at both endpoints give based gauges.
GaugePath gauge_from_generators(const GroupSpec& g, int grid_n,
                                const AlgebraElement& xi1, const GaugeProfile& phi1,
                                const GaugeProfile& dphi1, const AlgebraElement& xi2,
                                const GaugeProfile& phi2, const GaugeProfile& dphi2);
GaugePath constant_gauge(const GroupSpec& g, int grid_n, const GroupElement& c);

// --- moment map and charts ----------------------------------------------------------

// nu = (nu^0, nu^1) on G x G: nu^0 = (T_1(0), T_2(0), T_3(0)),
// nu^1 = -(T_1(1), T_2(1), T_3(1)) under g^* = g.
MomentValue nu_moment(const NahmPath& p, double resid_tol = 1e-4);

// Holomorphic chart: solves du/ds u^{-1} = -(T_0 + sqrt(-1) T_1), u(0) = 1,
// returns (Q, eta) = (u(1)^{-1}, T_2(0) + sqrt(-1) T_3(0)). Validates the
// transport identity T_2 + iT_3 = Ad_{u(s)} eta on the grid.
CotangentPoint holomorphic_coords(const NahmPath& p, double transport_tol = 1e-4);

// nu_C(Q, eta) = (eta, -Ad_{Q^{-1}} eta); fills only the complex part.
MomentValue nu_complex(const CotangentPoint& c);

// Dancer-Swann chart: f solves Ad_f T_0 + f (d/ds) f^{-1} = 0, f(1) = 1;
// returns (f(0)^{-1}, T_1(1), T_2(1), T_3(1)).
struct DsChart {
  GroupElement theta;
  std::array<AlgebraElement, 3> y;
};
DsChart ds_chart(const NahmPath& p, double resid_tol = 1e-4);

// Torus model N_{T^k} = T^k x R^{3k}: path with T_0 integrating to theta and
// constant T_i given by y.
NahmPath torus_model_path(const GroupSpec& torus, const VecR& alpha, const VecR& y1,
                          const VecR& y2, const VecR& y3, int grid_n);
// nu of a torus chart point (alpha enters only through the group action).
MomentValue nu_torus_chart(const GroupSpec& torus, const VecR& y1, const VecR& y2,
                           const VecR& y3);

// --- energy --------------------------------------------------------------------------

// E([T]) = |T_1|^2_{L^2} + 1/2 (|T_2|^2 + |T_3|^2), composite trapezoid.
double energy(const NahmPath& p);

// Kahler-potential evaluation E(Q, eta) by minimizing the discrete action
//   sum 1/4 d(h_i, h_{i+1})^2 / ds + ds * trapz 1/2 Re tr(A h^{-1} A^* h)
// over piecewise-geodesic paths h in the positive-definite symmetric space,
// endpoints fixed. A = Ad_{a^{-1}} eta with a*a = h_0.
struct PathEnergyOptions {
  int grid = 64;
  double rel_tol = 1e-10;
  int max_sweeps = 20000;
};

// General endpoints; h0, h1 are per-factor positive blocks (matrix factors)
// or abelian chart coordinates xi with h = e^{2 xi} (torus/vector factors
// use flat closed forms).
double path_energy_min(const CotangentPoint& c, const std::vector<Mat>& h0,
                       const std::vector<Mat>& h1, const PathEnergyOptions& opt = {});

// E as a function on N_G = G^C x g^C: endpoints 1 and (Q Q^*)^{-1}, A = eta.
double energy_potential(const CotangentPoint& c, const PathEnergyOptions& opt = {});

}  // namespace hkq
