#include "hkq/kempf_ness.hpp"

#include <cmath>
#include <limits>

namespace hkq {

namespace {

bool point_finite(const Point& p) {
  for (const auto& b : p.z)
    if (!b.allFinite()) return false;
  for (const auto& b : p.w)
    if (!b.allFinite()) return false;
  return true;
}

// 1/2 E of the cotangent datum translated by g; +inf on overflow.
double e_term_at(const KNProblem& pr, const GroupElement& g) {
  if (pr.potential != KNPotential::FlatPlusE) return 0.0;
  auto [g0, g1] = rho_group(pr.spec, g);
  GroupElement q = mul(g0, mul(pr.cot->Q, inverse(g1)));
  for (const auto& b : q.blocks)
    if (!b.allFinite()) return std::numeric_limits<double>::infinity();
  CotangentPoint c{pr.spec.G, q, Ad(g0, pr.cot->eta)};
  return 0.5 * energy_potential(c, pr.energy_opt);
}

VecR moment_term(const KNProblem& pr, const Point& y) {
  return pr.L.basis.transpose() * moment_hat(pr.spec, y).re;
}

// zeta pairing along the coset of g: affine along geodesics for zeta in Z_L.
double zeta_term(const KNProblem& pr, const GroupElement& g) {
  PolarDecomposition pd = polar_decompose(g);
  return pr.zeta1.dot(project(pr.L, pd.xi));
}

VecR e_term_gradient(const KNProblem& pr, const GroupElement& g) {
  const int d = pr.L.dim();
  VecR grad = VecR::Zero(d);
  if (pr.potential != KNPotential::FlatPlusE) return grad;
  const double h = pr.fd_step;
  for (int a = 0; a < d; ++a) {
    AlgebraElement dir = embed(pr.L, VecR::Unit(d, a));
    const double ep = e_term_at(pr, mul(exp_sqrtminus1(dir, h), g));
    const double em = e_term_at(pr, mul(exp_sqrtminus1(dir, -h), g));
    grad(a) = (ep - em) / (2.0 * h);
  }
  return grad;
}

}  // namespace

KNProblem make_kn_problem(ActionSpec spec, SubAlgebra L, Point x, VecR zeta1,
                          KNPotential potential, std::optional<CotangentPoint> cot) {
  KNProblem pr;
  pr.spec = std::move(spec);
  pr.L = std::move(L);
  pr.x = std::move(x);
  pr.zeta1 = std::move(zeta1);
  pr.potential = potential;
  pr.cot = std::move(cot);
  require(pr.zeta1.size() == pr.L.dim(), "make_kn_problem: zeta dimension");
  MatR z = center_basis(pr.L);
  VecR proj = z * (z.transpose() * pr.zeta1);
  require((proj - pr.zeta1).norm() < 1e-10,
          "make_kn_problem: zeta_1 must lie in Z_L");
  if (potential == KNPotential::FlatPlusE)
    require(pr.cot.has_value(), "make_kn_problem: flat_plus_E needs (Q, eta)");
  return pr;
}

double kn_value_at_group(const KNProblem& pr, const GroupElement& g) {
  Point y = act(pr.spec, g, pr.x);
  if (!point_finite(y)) return std::numeric_limits<double>::infinity();
  return 0.5 * enorm2(y) - zeta_term(pr, g) + e_term_at(pr, g);
}

double kn_value(const KNProblem& pr, const VecR& xi) {
  return kn_value_at_group(pr, exp_sqrtminus1(embed(pr.L, xi)));
}

VecR kn_gradient_at_group(const KNProblem& pr, const GroupElement& g) {
  Point y = act(pr.spec, g, pr.x);
  return moment_term(pr, y) - pr.zeta1 + e_term_gradient(pr, g);
}

VecR kn_gradient(const KNProblem& pr, const VecR& xi) {
  return kn_gradient_at_group(pr, exp_sqrtminus1(embed(pr.L, xi)));
}

namespace {

// Slope of the functional at parameter t along the normalized ray xi_bar;
// +inf when the translated point overflows.
double ray_slope(const KNProblem& pr, const VecR& xi_bar, double t) {
  GroupElement g = exp_sqrtminus1(embed(pr.L, xi_bar), t);
  Point y = act(pr.spec, g, pr.x);
  if (!point_finite(y)) return std::numeric_limits<double>::infinity();
  double s = (moment_term(pr, y) - pr.zeta1).dot(xi_bar);
  if (pr.potential == KNPotential::FlatPlusE) {
    const double h = pr.fd_step;
    AlgebraElement dir = embed(pr.L, xi_bar);
    const double ep = e_term_at(pr, exp_sqrtminus1(dir, t + h));
    const double em = e_term_at(pr, exp_sqrtminus1(dir, t - h));
    if (!std::isfinite(ep) || !std::isfinite(em))
      return std::numeric_limits<double>::infinity();
    s += (ep - em) / (2.0 * h);
  }
  return s;
}

// Directional derivative of the functional at e^{sqrt(-1) t d} g.
double dir_slope(const KNProblem& pr, const GroupElement& g, const VecR& d,
                 const AlgebraElement& dd, double t) {
  GroupElement gt = mul(exp_sqrtminus1(dd, t), g);
  Point y = act(pr.spec, gt, pr.x);
  if (!point_finite(y)) return std::numeric_limits<double>::infinity();
  double s = (moment_term(pr, y) - pr.zeta1).dot(d);
  if (pr.potential == KNPotential::FlatPlusE) {
    const double h = pr.fd_step;
    const double ep = e_term_at(pr, mul(exp_sqrtminus1(dd, t + h), g));
    const double em = e_term_at(pr, mul(exp_sqrtminus1(dd, t - h), g));
    if (!std::isfinite(ep) || !std::isfinite(em))
      return std::numeric_limits<double>::infinity();
    s += (ep - em) / (2.0 * h);
  }
  return s;
}

// Exact line minimization on the convex section: the slope is nondecreasing
// in t, so expand a bracket and bisect to the root. Returns the step, or
// `cap` when the slope stays negative (escape direction).
double line_minimize(const KNProblem& pr, const GroupElement& g, const VecR& d,
                     double cap) {
  AlgebraElement dd = embed(pr.L, d);
  Point y = act(pr.spec, g, pr.x);
  // Newton guess from the flat second derivative along the geodesic,
  // d^2/dt^2 = 2 |d^ . y|^2 in Euclidean coordinates.
  const double f1 = (moment_term(pr, y) - pr.zeta1).dot(d);
  const double f2 = 2.0 * enorm2(inf_act(pr.spec, dd, y));
  double t = f2 > 1e-14 ? std::max(1e-12, -f1 / f2) : 1.0;
  t = std::min(t, cap);
  double lo = 0.0, hi = t;
  double s_hi = dir_slope(pr, g, d, dd, hi);
  int expand = 0;
  while (s_hi < 0 && expand++ < 60) {
    lo = hi;
    hi = std::min(2.0 * hi, cap);
    if (hi >= cap) {
      s_hi = dir_slope(pr, g, d, dd, cap);
      if (s_hi < 0) return cap;
      break;
    }
    s_hi = dir_slope(pr, g, d, dd, hi);
  }
  if (!std::isfinite(s_hi)) return lo > 0 ? lo : 0.25 * hi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double sm = dir_slope(pr, g, d, dd, mid);
    if (!std::isfinite(sm)) {
      hi = mid;
      continue;
    }
    (sm < 0 ? lo : hi) = mid;
    if (hi - lo < 1e-14 * (1.0 + hi)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

KNResult kn_minimize(const KNProblem& pr, const KNOptions& opt,
                     const std::optional<GroupElement>& start) {
  KNResult res;
  res.g = start.value_or(identity_element(pr.spec.H, true));
  double trigger = opt.ray_trigger;
  const int dim = pr.L.dim();
  VecR prev_grad = VecR::Zero(dim);
  VecR d = VecR::Zero(dim);

  for (int iter = 0; iter < opt.max_iter; ++iter) {
    res.iterations = iter;
    VecR grad = kn_gradient_at_group(pr, res.g);
    if (opt.restrict_vx) {
      Point y = act(pr.spec, res.g, pr.x);
      StabilizerData sd = stabilizer_data(pr.spec, pr.L, y);
      grad = sd.vx * (sd.vx.transpose() * grad);
    }
    const double gn = grad.norm();
    if (gn < opt.tol) {
      PolarDecomposition pd = polar_decompose(res.g);
      res.status = KNResult::Status::Critical;
      res.xi = project(pr.L, pd.xi);
      res.value = kn_value_at_group(pr, res.g);
      res.grad_norm = gn;
      return res;
    }

    PolarDecomposition pd = polar_decompose(res.g);
    VecR xi_now = project(pr.L, pd.xi);
    if (xi_now.norm() > trigger) {
      VecR xi_bar = xi_now / xi_now.norm();
      const double slope = ray_slope(pr, xi_bar, xi_now.norm());
      if (std::isfinite(slope) && slope <= opt.tol) {
        res.status = KNResult::Status::Divergent;
        res.xi = xi_bar;
        res.slope = slope;
        res.value = kn_value_at_group(pr, res.g);
        res.grad_norm = gn;
        return res;
      }
      trigger *= 2.0;  // not certified; keep descending
    }

    // Polak-Ribiere conjugate direction with reset safeguards
    if (iter % (2 * dim + 4) == 0 || d.size() == 0) {
      d = -grad;
    } else {
      const double denom = prev_grad.squaredNorm();
      double beta = denom > 0 ? grad.dot(grad - prev_grad) / denom : 0.0;
      beta = std::max(0.0, beta);
      d = -grad + beta * d;
      if (d.dot(grad) > -1e-12 * d.norm() * gn) d = -grad;
    }
    prev_grad = grad;

    const double cap = 64.0 / std::max(d.norm(), 1e-12);
    const double t = line_minimize(pr, res.g, d, cap);
    if (t <= 0) {
      res.status = KNResult::Status::Inconclusive;
      res.value = kn_value_at_group(pr, res.g);
      res.grad_norm = gn;
      res.xi = xi_now;
      return res;
    }
    res.g = mul(exp_sqrtminus1(embed(pr.L, d), t), res.g);
  }
  res.status = KNResult::Status::Inconclusive;
  res.value = kn_value_at_group(pr, res.g);
  res.grad_norm = kn_gradient_at_group(pr, res.g).norm();
  PolarDecomposition pd = polar_decompose(res.g);
  res.xi = project(pr.L, pd.xi);
  return res;
}

// --- stabilizers ----------------------------------------------------------------------

namespace {

VecC flatten_point(const Point& p) {
  int total = 0;
  for (size_t m = 0; m < p.z.size(); ++m)
    total += static_cast<int>(p.z[m].size() + p.w[m].size());
  VecC v(total);
  int at = 0;
  for (size_t m = 0; m < p.z.size(); ++m) {
    for (int j = 0; j < p.z[m].size(); ++j) v(at++) = p.z[m].data()[j];
    for (int j = 0; j < p.w[m].size(); ++j) v(at++) = p.w[m].data()[j];
  }
  return v;
}

}  // namespace

StabilizerData stabilizer_data(const ActionSpec& spec, const SubAlgebra& L,
                               const Point& x, double tol) {
  const int d = L.dim();
  Mat K(flatten_point(x).size(), d);
  for (int a = 0; a < d; ++a) {
    AlgebraElement xi = embed(L, VecR::Unit(d, a));
    K.col(a) = flatten_point(inf_act(spec, xi, x));
  }
  StabilizerData sd;
  sd.stab_c = kernel_basis_c(K, tol);
  MatR Kr(2 * K.rows(), d);
  Kr.topRows(K.rows()) = K.real();
  Kr.bottomRows(K.rows()) = K.imag();
  sd.stab = kernel_basis(Kr, tol);
  MatR cand(d, 2 * sd.stab_c.cols());
  cand.leftCols(sd.stab_c.cols()) = sd.stab_c.real();
  cand.rightCols(sd.stab_c.cols()) = sd.stab_c.imag();
  sd.stab_tilde = span_basis(cand, tol);
  sd.vx = kernel_basis(MatR(sd.stab_tilde.transpose()), tol);
  return sd;
}

StabilityResult stability_classify(const KNProblem& pr, const KNOptions& opt0) {
  KNOptions opt = opt0;
  opt.restrict_vx = true;
  StabilityResult out;
  out.kn = kn_minimize(pr, opt);
  switch (out.kn.status) {
    case KNResult::Status::Critical: {
      Point y = act(pr.spec, out.kn.g, pr.x);
      StabilizerData sd = stabilizer_data(pr.spec, pr.L, y);
      out.stabilizer_dim = static_cast<int>(sd.stab.cols());
      out.cls = out.stabilizer_dim == 0 ? StabilityClass::Stable
                                        : StabilityClass::Polystable;
      break;
    }
    case KNResult::Status::Divergent:
      out.cls = StabilityClass::Unstable;
      break;
    case KNResult::Status::Inconclusive:
      out.cls = StabilityClass::Inconclusive;
      break;
  }
  return out;
}

bool stabilizer_polar_check(const KNProblem& pr, Rng& rng, int samples, double tol) {
  VecR grad = kn_gradient(pr, VecR::Zero(pr.L.dim()));
  require(grad.norm() < 1e-6,
          "stabilizer_polar_check: base point is not critical");
  StabilizerData sd = stabilizer_data(pr.spec, pr.L, pr.x);
  const int dc = static_cast<int>(sd.stab_c.cols());
  const int dr = static_cast<int>(sd.stab.cols());
  if (dc != dr) return false;  // dim_R stab^C = 2 dc must equal 2 dim stab
  if (dc == 0) return true;
  const double xref = std::sqrt(enorm2(pr.x)) + 1.0;
  for (int s = 0; s < samples; ++s) {
    VecC c(dc);
    for (int j = 0; j < dc; ++j) c(j) = rng.cnormal();
    VecC coords_l = sd.stab_c * c;
    GroupElement gamma = exp_of(embed_c(pr.L, coords_l));
    // gamma must stabilize x
    Point gx = act(pr.spec, gamma, pr.x);
    if (std::sqrt(enorm2(add(gx, scale_point(pr.x, -1.0)))) > tol * xref) return false;
    PolarDecomposition pd = polar_decompose(gamma);
    Point lx = act(pr.spec, pd.compact, pr.x);
    if (std::sqrt(enorm2(add(lx, scale_point(pr.x, -1.0)))) > tol * xref) return false;
    Point px = act(pr.spec, exp_sqrtminus1(pd.xi), pr.x);
    if (std::sqrt(enorm2(add(px, scale_point(pr.x, -1.0)))) > tol * xref) return false;
  }
  return true;
}

bool scale_check(const KNProblem& pr, const StabilityResult& base, double s,
                 const KNOptions& opt) {
  require(s > 0, "scale_check: s must be positive");
  KNProblem scaled = pr;
  scaled.zeta1 = s * pr.zeta1;
  StabilityResult r = stability_classify(scaled, opt);
  return r.cls == base.cls;
}

double convexity_probe(const KNProblem& pr, Rng& rng, int n_geodesics,
                       double radius, double h) {
  const int d = pr.L.dim();
  double worst = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_geodesics; ++i) {
    VecR base(d), dir(d);
    for (int a = 0; a < d; ++a) {
      base(a) = radius * rng.normal();
      dir(a) = rng.normal();
    }
    dir.normalize();
    GroupElement g0 = exp_sqrtminus1(from_coords(pr.spec.H, pr.L.basis * base));
    AlgebraElement dd = embed(pr.L, dir);
    const double fp = kn_value_at_group(pr, mul(exp_sqrtminus1(dd, h), g0));
    const double f0 = kn_value_at_group(pr, g0);
    const double fm = kn_value_at_group(pr, mul(exp_sqrtminus1(dd, -h), g0));
    worst = std::min(worst, (fp - 2.0 * f0 + fm) / (h * h));
  }
  return worst;
}

}  // namespace hkq
