#pragma once

#include "hkq/kempf_ness.hpp"

namespace hkq {

// The Taub-NUT deformation correspondence psi_hat(x) = (x, 1, eta(x)) between
// the complex level sets of mu and sigma, quotient metric/form evaluation on
// horizontal spaces, and the explicit diagonal chart used for the k = 1
// Taub-NUT identification.

struct DeformPair {
  Point x;
  CotangentPoint image;  // (x, Q = 1, eta)
  MomentValue zeta;      // parameter over H (both parts)
};

// Unique eta in g^C with mu_hat_C(x) - zeta_C = rho^*(-eta, eta); zetaC is
// the complex parameter in H coordinates. Errors when x is off the complex
// level set or when rho_bar is not surjective.
AlgebraElement solve_eta(const ActionSpec& spec, const Point& x, const VecC& zetaC,
                         double pre_tol = 1e-8, double resid_tol = 1e-10);

DeformPair psi_hat(const ActionSpec& spec, const Point& x, const MomentValue& zeta,
                   double pre_tol = 1e-8);

struct PsiInverseResult {
  Point x;         // h^{-1} x, on the mu_C level set
  GroupElement h;  // element with rho(h) = (h0, h1), h0 h1^{-1} = Q
};

// Inverse correspondence via a preset-specific exact section of rho_bar.
PsiInverseResult psi_inverse(const ActionSpec& spec, const Point& x,
                             const CotangentPoint& cot, const VecC& zetaC,
                             double pre_tol = 1e-8);

// sigma^{-1}(zeta) -> sigma^{-1}(zeta') for iota^* zeta = iota^* zeta':
// T + A_hat with rho^*(A, -A) = zeta' - zeta. The returned path's residual is
// the caller's to inspect; it vanishes for constant commuting data.
NahmPath parameter_shift(const ActionSpec& spec, const MomentValue& zeta,
                         const MomentValue& zetap, const NahmPath& path);

// Complex stabilizer dimension of psi_hat(x) = (x, 1, eta) inside H^C.
int psihat_stab_dim_c(const ActionSpec& spec, const Point& x,
                      const AlgebraElement& eta, double tol = 1e-10);

// --- quotient geometry -----------------------------------------------------------

// Ambient point of M x N_{T^k} in the torus-model chart (alpha, y), or plain
// M when has_chart is false. active_pairs selects the M blocks spanning the
// ambient submanifold (e.g. the diagonal slice M_0).
struct ChartPoint {
  Point x;
  VecR alpha;  // k torus angles
  VecR y1, y2, y3;
  bool has_chart = false;
  std::vector<int> active_pairs;
};

struct ChartTangent {
  Point X;
  VecR dalpha;
  VecR dy1, dy2, dy3;
};

double chart_metric(const ChartPoint& p, const ChartTangent& a, const ChartTangent& b);
double chart_form(int axis, const ChartPoint& p, const ChartTangent& a,
                  const ChartTangent& b);
cxd chart_form_c(const ChartPoint& p, const ChartTangent& a, const ChartTangent& b);

// Killing tangent of xi at p; for chart points rho(xi) must be diagonal.
ChartTangent killing_tangent(const ActionSpec& spec, const ChartPoint& p,
                             const AlgebraElement& xi);

struct QuotientChart {
  MatR gram;                        // ambient metric on the horizontal basis
  std::vector<ChartTangent> basis;  // orthonormalized in chart coordinates
  int killing_rank = 0;
};

// Horizontal space = ker(d sigma restricted to L) cap (Killing span)^perp.
// Errors on 0 < rank < dim L (orbifold locus); rank 0 means a trivial action
// and drops the orthogonality constraints.
QuotientChart quotient_metric_at(const ActionSpec& spec, const SubAlgebra& L,
                                 const ChartPoint& p, double tol = 1e-10);

struct QuotientForms {
  MatR omega1, omega2, omega3;
  Mat omega_c;
};
QuotientForms quotient_forms_at(const ActionSpec& spec, const SubAlgebra& L,
                                const ChartPoint& p, double tol = 1e-10);

// --- Hilbert-scheme diagonal chart -------------------------------------------------

// tau for the diagonal slice: tau_1 = |a|^2 - |b|^2, tau_C = 2 a b.
void hilb_tau(const VecC& a, const VecC& b, VecR& t1, VecR& t2, VecR& t3);

// Point of sigma_0^{-1}(0): x = (diag a, diag b, 0, 0), chart (theta, tau(x)).
ChartPoint hilb_sigma_zero_chart(const ActionSpec& spec, const VecC& a, const VecC& b,
                                 const VecR& theta);

// The torus subalgebra h_0 = t^k x {0} inside h = u(k) + u(k).
SubAlgebra hilb_torus_subalgebra(const ActionSpec& spec);

// --- k = 1 Taub-NUT pipeline --------------------------------------------------------

struct GHSample {
  double r = 0;        // |y|
  double V = 0;        // Gibbons-Hawking potential from the fiber norm
  double shape_resid = 0;  // | g_base - V I | / V, conformal-flatness defect
};

// Quotient-metric sample of sigma_0^{-1}(0)/T^1 at the point (a, b).
GHSample taubnut_sample(const ActionSpec& spec, cxd a, cxd b, double alpha = 0.0);

struct GHFit {
  double lambda = 0;
  double m = 0;
  double eval(double r) const { return lambda + m / r; }
};
GHFit fit_gibbons_hawking(const GHSample& s1, const GHSample& s2);

// Matched point of the psi correspondence on the real sigma_0 level (k = 1):
// the H^C flow of (x, 1, eta(x)) meeting y_1 = tau_1.
ChartPoint psi_match_k1(const ActionSpec& spec, cxd a, cxd b);

}  // namespace hkq
