#pragma once

#include <optional>

#include "hkq/flat.hpp"
#include "hkq/nahm.hpp"

namespace hkq {

// Geodesically convex Kempf-Ness functionals on L\L^C for a subgroup L of the
// acting group H. The flat potential is phi(x) = 1/2 |x|^2 in Euclidean
// coordinates, whose derivative along {L e^{sqrt(-1) t xi}} is the pairing
// with the real moment map; flat_plus_E adds 1/2 E of the translated
// cotangent datum, the coefficient calibrated so that the geodesic gradient
// is sigma_1 - zeta_1 throughout.

enum class KNPotential { Flat, FlatPlusE };

struct KNProblem {
  ActionSpec spec;
  SubAlgebra L;
  Point x;
  VecR zeta1;  // coordinates in the L basis; must lie in Z_L
  KNPotential potential = KNPotential::Flat;
  std::optional<CotangentPoint> cot;  // (Q, eta) over spec.G for FlatPlusE
  PathEnergyOptions energy_opt{32, 1e-10, 20000};
  double fd_step = 1e-4;  // finite-difference step for the E-term gradient
};

// Validates zeta1 against Z_L (projection residual < 1e-10).
KNProblem make_kn_problem(ActionSpec spec, SubAlgebra L, Point x, VecR zeta1,
                          KNPotential potential = KNPotential::Flat,
                          std::optional<CotangentPoint> cot = std::nullopt);

double kn_value(const KNProblem& pr, const VecR& xi);
double kn_value_at_group(const KNProblem& pr, const GroupElement& g);
// Dual of m(e^{sqrt(-1) xi} x) - zeta_1 in L coordinates.
VecR kn_gradient(const KNProblem& pr, const VecR& xi);
VecR kn_gradient_at_group(const KNProblem& pr, const GroupElement& g);

struct KNOptions {
  double tol = 1e-8;
  int max_iter = 10000;
  double armijo_c = 1e-4;
  double ray_trigger = 1e3;
  bool restrict_vx = false;  // Lemma 3.1 reduction to V_x directions
};

struct KNResult {
  enum class Status { Critical, Divergent, Inconclusive };
  Status status = Status::Inconclusive;
  VecR xi;           // critical chart point, or the normalized witness ray
  double value = 0;
  double grad_norm = 0;
  double slope = 0;  // large-radius slope certificate when divergent
  int iterations = 0;
  GroupElement g;    // terminal iterate in H^C
};

KNResult kn_minimize(const KNProblem& pr, const KNOptions& opt = {});

// --- stabilizers ------------------------------------------------------------------

struct StabilizerData {
  MatR stab;                // basis of stab(x) in L coordinates
  Eigen::MatrixXcd stab_c;  // basis of stab(x)^C
  MatR stab_tilde;          // pi_Im(stab(x)^C)
  MatR vx;                  // orthogonal complement of stab_tilde in l
};

StabilizerData stabilizer_data(const ActionSpec& spec, const SubAlgebra& L,
                               const Point& x, double tol = 1e-10);

enum class StabilityClass { Stable, Polystable, Unstable, Inconclusive };

struct StabilityResult {
  StabilityClass cls = StabilityClass::Inconclusive;
  int stabilizer_dim = -1;  // real stabilizer dimension at the critical point
  KNResult kn;
};

StabilityResult stability_classify(const KNProblem& pr, const KNOptions& opt = {});

// At a critical base point: checks dim stab^C = 2 dim stab and that sampled
// elements of Stab(x)^C polar-split into Stab(x) exp(sqrt(-1) stab(x)).
bool stabilizer_polar_check(const KNProblem& pr, Rng& rng, int samples = 8,
                            double tol = 1e-8);

// Reclassifies at s * zeta_1 and reports whether the class is unchanged.
bool scale_check(const KNProblem& pr, const StabilityResult& base, double s,
                 const KNOptions& opt = {});

// Minimum second central difference of t -> kn_value along random geodesics;
// geodesic convexity makes this >= -tolerance.
double convexity_probe(const KNProblem& pr, Rng& rng, int n_geodesics,
                       double radius = 0.5, double h = 1e-3);

}  // namespace hkq
