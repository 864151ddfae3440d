#include "hkq/nahm.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace hkq {

namespace {

using Triple = std::array<AlgebraElement, 3>;

Triple rhs(const AlgebraElement& t0, const Triple& t) {
  // dT_i/ds = -[T_0, T_i] - [T_j, T_k]
  Triple d;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    d[i] = scale(add(bracket(t0, t[i]), bracket(t[j], t[k])), -1.0);
  }
  return d;
}

Triple axpy(const Triple& a, double s, const Triple& b) {
  Triple r;
  for (int i = 0; i < 3; ++i) r[i] = add(a[i], scale(b[i], s));
  return r;
}

double max_norm(const Triple& t) {
  double m = 0;
  for (const auto& u : t) m = std::max(m, norm(u));
  return m;
}

}  // namespace

NahmPath nahm_integrate(const std::array<AlgebraElement, 3>& t_init,
                        const std::function<AlgebraElement(double)>& t0_profile,
                        int grid_n, double blowup) {
  require(grid_n >= 16, "nahm_integrate: grid must have at least 16 intervals");
  const GroupSpec g = t_init[0].group;
  NahmPath p;
  p.group = g;
  p.n = grid_n;
  const double h = 1.0 / grid_n;

  Triple t = t_init;
  p.samples.push_back({t0_profile(0.0), t[0], t[1], t[2]});
  for (int s = 0; s < grid_n; ++s) {
    const double s0 = s * h;
    const AlgebraElement a0 = t0_profile(s0);
    const AlgebraElement am = t0_profile(s0 + 0.5 * h);
    const AlgebraElement a1 = t0_profile(s0 + h);
    const Triple k1 = rhs(a0, t);
    const Triple k2 = rhs(am, axpy(t, 0.5 * h, k1));
    const Triple k3 = rhs(am, axpy(t, 0.5 * h, k2));
    const Triple k4 = rhs(a1, axpy(t, h, k3));
    for (int i = 0; i < 3; ++i)
      t[i] = add(t[i], scale(add(add(k1[i], scale(k2[i], 2.0)),
                                 add(scale(k3[i], 2.0), k4[i])),
                             h / 6.0));
    if (max_norm(t) > blowup)
      throw Error("nahm_integrate: blowup before s = 1 (initial data outside "
                  "the existence window)");
    p.samples.push_back({a1, t[0], t[1], t[2]});
  }
  return p;
}

NahmPath constant_path(const GroupSpec& g, const std::array<AlgebraElement, 4>& t,
                       int grid_n) {
  NahmPath p;
  p.group = g;
  p.n = grid_n;
  p.samples.assign(static_cast<size_t>(grid_n) + 1, t);
  return p;
}

double nahm_residual(const NahmPath& p) {
  require(p.n >= 4, "nahm_residual: grid too small");
  const double h = p.step();
  double worst = 0;
  for (int s = 2; s <= p.n - 2; ++s) {
    const auto& tm2 = p.samples[static_cast<size_t>(s - 2)];
    const auto& tm1 = p.samples[static_cast<size_t>(s - 1)];
    const auto& tc = p.samples[static_cast<size_t>(s)];
    const auto& tp1 = p.samples[static_cast<size_t>(s + 1)];
    const auto& tp2 = p.samples[static_cast<size_t>(s + 2)];
    for (int i = 1; i <= 3; ++i) {
      const int j = (i % 3) + 1, k = ((i + 1) % 3) + 1;
      // five-point derivative
      AlgebraElement d = scale(
          add(add(scale(tp2[static_cast<size_t>(i)], -1.0), scale(tp1[static_cast<size_t>(i)], 8.0)),
              add(scale(tm1[static_cast<size_t>(i)], -8.0), tm2[static_cast<size_t>(i)])),
          1.0 / (12.0 * h));
      AlgebraElement defect =
          add(d, add(bracket(tc[0], tc[static_cast<size_t>(i)]),
                     bracket(tc[static_cast<size_t>(j)], tc[static_cast<size_t>(k)])));
      worst = std::max(worst, norm(defect));
    }
  }
  return worst;
}

// --- gauge action ---------------------------------------------------------------

NahmPath gauge_act(const GaugePath& g, const NahmPath& p) {
  require(g.group == p.group, "gauge_act: group mismatch");
  require(static_cast<int>(g.g.size()) == p.n + 1, "gauge_act: grid mismatch");
  NahmPath out = p;
  for (int s = 0; s <= p.n; ++s) {
    const auto& gs = g.g[static_cast<size_t>(s)];
    auto& smp = out.samples[static_cast<size_t>(s)];
    smp[0] = add(Ad(gs, p.samples[static_cast<size_t>(s)][0]),
                 scale(g.dlog[static_cast<size_t>(s)], -1.0));
    for (int i = 1; i <= 3; ++i)
      smp[static_cast<size_t>(i)] = Ad(gs, p.samples[static_cast<size_t>(s)][static_cast<size_t>(i)]);
    for (auto& b : smp) b.complexified = false;
  }
  return out;
}

GaugePath gauge_from_generators(const GroupSpec& g, int grid_n,
                                const AlgebraElement& xi1, const GaugeProfile& phi1,
                                const GaugeProfile& dphi1, const AlgebraElement& xi2,
                                const GaugeProfile& phi2, const GaugeProfile& dphi2) {
  GaugePath gp;
  gp.group = g;
  const double h = 1.0 / grid_n;
  bool based = true;
  for (int s = 0; s <= grid_n; ++s) {
    const double t = s * h;
    GroupElement e1 = exp_of(scale(xi1, phi1(t)));
    GroupElement e2 = exp_of(scale(xi2, phi2(t)));
    GroupElement gs = mul(e1, e2);
    gs.complexified = false;
    // g' g^{-1} = phi1' xi1 + phi2' Ad_{e1} xi2
    AlgebraElement dl = add(scale(xi1, dphi1(t)), scale(Ad(e1, xi2), dphi2(t)));
    dl.complexified = false;
    gp.g.push_back(gs);
    gp.dlog.push_back(dl);
    if (s == 0 || s == grid_n) {
      GroupElement idm = identity_element(g);
      for (size_t f = 0; f < gs.blocks.size(); ++f)
        if ((gs.blocks[f] - idm.blocks[f]).norm() > 1e-10) based = false;
    }
  }
  gp.based = based;
  return gp;
}

GaugePath constant_gauge(const GroupSpec& g, int grid_n, const GroupElement& c) {
  GaugePath gp;
  gp.group = g;
  gp.g.assign(static_cast<size_t>(grid_n) + 1, c);
  gp.dlog.assign(static_cast<size_t>(grid_n) + 1, zero_algebra(g));
  gp.based = false;
  return gp;
}

// --- moment map and charts ---------------------------------------------------------

MomentValue nu_moment(const NahmPath& p, double resid_tol) {
  const double r = nahm_residual(p);
  require(r < resid_tol, "nu_moment: path residual " + std::to_string(r) +
                             " above threshold (not a solution)");
  const GroupSpec gg = p.group.times(p.group);
  MomentValue m = zero_moment(gg.dim(), "GxG");
  const int dg = p.group.dim();
  const auto& first = p.samples.front();
  const auto& last = p.samples.back();
  m.re.head(dg) = coords(first[1]);
  m.re.tail(dg) = -coords(last[1]);
  m.c.head(dg) = coords_c(add(complexify(first[2]), scale(first[3], kI)));
  m.c.tail(dg) = -coords_c(add(complexify(last[2]), scale(last[3], kI)));
  return m;
}

namespace {

// coefficient C(s) = -(T_0 + i T_1) on the grid plus 4th-order midpoints
struct OdeCoeffs {
  std::vector<std::vector<Mat>> node;  // per sample, per factor
  std::vector<std::vector<Mat>> mid;   // per interval, per factor
};

OdeCoeffs transport_coeffs(const NahmPath& p, bool use_t1) {
  // C = -(T_0 + i T_1) when use_t1; C = T_0 for the Dancer-Swann gauge fix.
  OdeCoeffs c;
  const int nf = p.group.factor_count();
  c.node.resize(p.samples.size());
  for (size_t s = 0; s < p.samples.size(); ++s) {
    for (int f = 0; f < nf; ++f) {
      Mat v = p.samples[s][0].blocks[static_cast<size_t>(f)];
      if (use_t1) v = -(v + kI * p.samples[s][1].blocks[static_cast<size_t>(f)]);
      c.node[s].push_back(v);
    }
  }
  c.mid.resize(static_cast<size_t>(p.n));
  for (int s = 0; s < p.n; ++s) {
    c.mid[static_cast<size_t>(s)].resize(static_cast<size_t>(nf));
    for (int f = 0; f < nf; ++f) {
      auto at = [&](int idx) -> const Mat& {
        return c.node[static_cast<size_t>(idx)][static_cast<size_t>(f)];
      };
      Mat m;
      if (s == 0)
        m = (5.0 * at(0) + 15.0 * at(1) - 5.0 * at(2) + at(3)) / 16.0;
      else if (s == p.n - 1)
        m = (5.0 * at(p.n) + 15.0 * at(p.n - 1) - 5.0 * at(p.n - 2) + at(p.n - 3)) / 16.0;
      else
        m = (-at(s - 1) + 9.0 * at(s) + 9.0 * at(s + 1) - at(s + 2)) / 16.0;
      c.mid[static_cast<size_t>(s)][static_cast<size_t>(f)] = m;
    }
  }
  return c;
}

// One RK4 step of u' = C(s) u (matrix/diagonal factors) or u' = C(s) (vector).
Mat rk4_linear_step(FactorKind kind, const Mat& u, const Mat& c0, const Mat& cm,
                    const Mat& c1, double h) {
  auto apply = [kind](const Mat& c, const Mat& v) -> Mat {
    switch (kind) {
      case FactorKind::Unitary:
        return c * v;
      case FactorKind::Torus:
        return c.cwiseProduct(v);
      case FactorKind::Vector:
        return c;
    }
    return c;
  };
  const Mat k1 = apply(c0, u);
  const Mat k2 = apply(cm, u + 0.5 * h * k1);
  const Mat k3 = apply(cm, u + 0.5 * h * k2);
  const Mat k4 = apply(c1, u + h * k3);
  return u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

CotangentPoint holomorphic_coords(const NahmPath& p, double transport_tol) {
  const GroupSpec& g = p.group;
  const int nf = g.factor_count();
  OdeCoeffs c = transport_coeffs(p, true);
  const double h = p.step();

  std::vector<GroupElement> u;
  u.reserve(p.samples.size());
  GroupElement uc = identity_element(g, true);
  // additive identity for vector factors is already zero
  u.push_back(uc);
  for (int s = 0; s < p.n; ++s) {
    for (int f = 0; f < nf; ++f) {
      const size_t fi = static_cast<size_t>(f);
      uc.blocks[fi] = rk4_linear_step(
          g.factor(f).kind, uc.blocks[fi], c.node[static_cast<size_t>(s)][fi],
          c.mid[static_cast<size_t>(s)][fi], c.node[static_cast<size_t>(s) + 1][fi], h);
    }
    u.push_back(uc);
  }

  CotangentPoint out;
  out.group = g;
  out.Q = inverse(u.back());
  out.eta = add(complexify(p.samples.front()[2]), scale(p.samples.front()[3], kI));

  // transport identity T_2 + i T_3 = Ad_{u(s)} eta
  double worst = 0;
  for (int s = 0; s <= p.n; ++s) {
    AlgebraElement lhs = add(complexify(p.samples[static_cast<size_t>(s)][2]),
                             scale(p.samples[static_cast<size_t>(s)][3], kI));
    AlgebraElement rhs_ = Ad(u[static_cast<size_t>(s)], out.eta);
    worst = std::max(worst, norm(add(lhs, scale(rhs_, -1.0))));
  }
  require(worst < transport_tol,
          "holomorphic_coords: transport identity violated (" + std::to_string(worst) +
              "), input is not a Nahm solution");
  return out;
}

MomentValue nu_complex(const CotangentPoint& c) {
  const GroupSpec gg = c.group.times(c.group);
  MomentValue m = zero_moment(gg.dim(), "GxG");
  const int dg = c.group.dim();
  m.c.head(dg) = coords_c(c.eta);
  m.c.tail(dg) = -coords_c(Ad(inverse(c.Q), c.eta));
  m.re.setZero();
  return m;
}

DsChart ds_chart(const NahmPath& p, double resid_tol) {
  const double r = nahm_residual(p);
  require(r < resid_tol, "ds_chart: path residual above threshold");
  const GroupSpec& g = p.group;
  const int nf = g.factor_count();
  // f' = f T_0 integrated backward from f(1) = 1; with reversed time
  // v(t) = f(1 - t) satisfies v' = -v T_0(1 - t).
  OdeCoeffs c = transport_coeffs(p, false);
  const double h = p.step();
  GroupElement fc = identity_element(g);
  for (int s = p.n; s > 0; --s) {
    for (int f = 0; f < nf; ++f) {
      const size_t fi = static_cast<size_t>(f);
      const Mat c1 = -c.node[static_cast<size_t>(s)][fi];
      const Mat cm = -c.mid[static_cast<size_t>(s - 1)][fi];
      const Mat c0 = -c.node[static_cast<size_t>(s - 1)][fi];
      // right multiplication: v' = -v C; transpose trick keeps one kernel
      switch (g.factor(f).kind) {
        case FactorKind::Unitary: {
          Mat vt = fc.blocks[fi].transpose();
          vt = rk4_linear_step(FactorKind::Unitary, vt, c1.transpose(), cm.transpose(),
                               c0.transpose(), h);
          fc.blocks[fi] = vt.transpose();
          break;
        }
        case FactorKind::Torus:
          fc.blocks[fi] = rk4_linear_step(FactorKind::Torus, fc.blocks[fi], c1, cm, c0, h);
          break;
        case FactorKind::Vector:
          fc.blocks[fi] = rk4_linear_step(FactorKind::Vector, fc.blocks[fi], c1, cm, c0, h);
          break;
      }
    }
  }
  fc.complexified = false;
  DsChart out;
  out.theta = inverse(fc);
  for (int i = 0; i < 3; ++i)
    out.y[static_cast<size_t>(i)] = p.samples.back()[static_cast<size_t>(i) + 1];
  return out;
}

NahmPath torus_model_path(const GroupSpec& g, const VecR& alpha, const VecR& y1,
                          const VecR& y2, const VecR& y3, int grid_n) {
  require(g.abelian(), "torus_model_path: group must be abelian");
  const int d = g.dim();
  require(alpha.size() == d && y1.size() == d && y2.size() == d && y3.size() == d,
          "torus_model_path: size mismatch");
  std::array<AlgebraElement, 4> t = {from_coords(g, alpha), from_coords(g, y1),
                                     from_coords(g, y2), from_coords(g, y3)};
  return constant_path(g, t, grid_n);
}

MomentValue nu_torus_chart(const GroupSpec& g, const VecR& y1, const VecR& y2,
                           const VecR& y3) {
  const GroupSpec gg = g.times(g);
  MomentValue m = zero_moment(gg.dim(), "GxG");
  const int d = g.dim();
  m.re.head(d) = y1;
  m.re.tail(d) = -y1;
  m.c.head(d) = y2.cast<cxd>() + kI * y3.cast<cxd>();
  m.c.tail(d) = -m.c.head(d);
  return m;
}

// --- energy ---------------------------------------------------------------------------

double energy(const NahmPath& p) {
  double s = 0;
  for (int i = 0; i <= p.n; ++i) {
    const auto& smp = p.samples[static_cast<size_t>(i)];
    double v = hnorm2(complexify(smp[1])) +
               0.5 * (hnorm2(complexify(smp[2])) + hnorm2(complexify(smp[3])));
    const double w = (i == 0 || i == p.n) ? 0.5 : 1.0;
    s += w * v;
  }
  return s * p.step();
}

namespace {

// Positive-definite symmetric space helpers (unitary factors, scale folded out).

double spd_dist2(const Mat& p, const Mat& q) {
  Eigen::SelfAdjointEigenSolver<Mat> es(p);
  Mat r = es.eigenvectors() *
          es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
          es.eigenvectors().adjoint();
  return log_pd(Mat(r * q * r)).squaredNorm();
}

// Riemannian log: tangent at q pointing to p.
Mat spd_log(const Mat& q, const Mat& p) {
  Mat qh = sqrt_pd(q);
  Mat qih = qh.inverse();
  return qh * log_pd(Mat(qih * p * qih)) * qh;
}

Mat spd_geodesic(const Mat& a, const Mat& b, double t) {
  Mat ah = sqrt_pd(a);
  Mat aih = ah.inverse();
  Mat l = log_pd(Mat(aih * b * aih));
  return ah * exp_hermitian(Mat(t * l)) * ah;
}

double spd_w(const Mat& a, const Mat& h) {
  return (a * h.inverse() * a.adjoint() * h).trace().real();
}

Mat spd_w_grad(const Mat& a, const Mat& h) {
  Mat hi = h.inverse();
  Mat c = a * hi * a.adjoint() - hi * a.adjoint() * h * a * hi;
  Mat ch = 0.5 * (c + c.adjoint());
  return h * ch * h;
}

struct NodeProblem {
  double quarter_over_ds;
  double half_ds_w;  // trapezoid weight folded in
  const Mat* a;
};

double node_local_energy(const NodeProblem& np, const Mat& prev, const Mat& h,
                         const Mat& next) {
  return np.quarter_over_ds * (spd_dist2(prev, h) + spd_dist2(h, next)) +
         np.half_ds_w * spd_w(*np.a, h);
}

// Piecewise-geodesic resampling of a node path onto m_new nodes.
std::vector<Mat> spd_resample(const std::vector<Mat>& path, int m_new) {
  const int m_old = static_cast<int>(path.size()) - 1;
  std::vector<Mat> out;
  out.reserve(static_cast<size_t>(m_new) + 1);
  for (int i = 0; i <= m_new; ++i) {
    const double t = static_cast<double>(i) * m_old / m_new;
    int j = std::min(static_cast<int>(t), m_old - 1);
    const double s = t - j;
    if (s < 1e-14)
      out.push_back(path[static_cast<size_t>(j)]);
    else
      out.push_back(spd_geodesic(path[static_cast<size_t>(j)], path[static_cast<size_t>(j) + 1], s));
  }
  return out;
}

// Minimizes the discrete action for one unitary factor; endpoints fixed.
double spd_path_minimize(const Mat& h0, const Mat& h1, const Mat& a, int grid,
                         double rel_tol, int max_sweeps) {
  require(grid >= 4, "path_energy_min: grid must be >= 4");
  // coarse-to-fine cascade of grids ending exactly at `grid`
  std::vector<int> levels{grid};
  while (levels.back() / 2 >= 4) levels.push_back(levels.back() / 2);
  std::reverse(levels.begin(), levels.end());

  std::vector<Mat> path;
  for (int i = 0; i <= levels.front(); ++i)
    path.push_back(spd_geodesic(h0, h1, static_cast<double>(i) / levels.front()));

  double total = 0;
  for (int m : levels) {
    if (static_cast<int>(path.size()) - 1 != m) path = spd_resample(path, m);
    const double ds = 1.0 / m;

    auto total_energy = [&]() {
      double e = 0;
      for (int i = 0; i < m; ++i) e += 0.25 / ds * spd_dist2(path[static_cast<size_t>(i)], path[static_cast<size_t>(i) + 1]);
      for (int i = 0; i <= m; ++i) {
        const double w = (i == 0 || i == m) ? 0.5 : 1.0;
        e += ds * w * 0.5 * spd_w(a, path[static_cast<size_t>(i)]);
      }
      return e;
    };

    double e_prev = total_energy();
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      for (int i = 1; i < m; ++i) {
        Mat& h = path[static_cast<size_t>(i)];
        const Mat& prev = path[static_cast<size_t>(i) - 1];
        const Mat& next = path[static_cast<size_t>(i) + 1];
        NodeProblem np{0.25 / ds, ds * 0.5, &a};
        Mat grad = -np.quarter_over_ds * 2.0 * (spd_log(h, prev) + spd_log(h, next)) +
                   np.half_ds_w * spd_w_grad(a, h);
        Mat hih = sqrt_pd(h).inverse();
        Mat gn = hih * grad * hih;  // gradient in the metric chart at h
        const double g2 = gn.squaredNorm();
        if (g2 < 1e-30) continue;
        const double f0 = node_local_energy(np, prev, h, next);
        double t = 1.0;
        Mat hh = sqrt_pd(h);
        for (int ls = 0; ls < 40; ++ls) {
          Mat cand = hh * exp_hermitian(Mat(-t * gn)) * hh;
          if (node_local_energy(np, prev, cand, next) <= f0 - 1e-4 * t * g2) {
            h = cand;
            break;
          }
          t *= 0.5;
        }
      }
      const double e = total_energy();
      const double drop = (e_prev - e) / std::max(1.0, std::abs(e_prev));
      e_prev = e;
      if (drop < rel_tol && sweep > 0) break;
      if (sweep == max_sweeps - 1)
        throw Error("path_energy_min: no convergence after max sweeps");
    }
    total = e_prev;
  }
  return total;
}

}  // namespace

double path_energy_min(const CotangentPoint& c, const std::vector<Mat>& h0,
                       const std::vector<Mat>& h1, const PathEnergyOptions& opt) {
  const GroupSpec& g = c.group;
  require(static_cast<int>(h0.size()) == g.factor_count() &&
              static_cast<int>(h1.size()) == g.factor_count(),
          "path_energy_min: endpoint block count mismatch");
  double total = 0;
  for (int f = 0; f < g.factor_count(); ++f) {
    const auto& fa = g.factor(f);
    const size_t fi = static_cast<size_t>(f);
    const Mat& eta = c.eta.blocks[fi];
    switch (fa.kind) {
      case FactorKind::Unitary: {
        if (fa.n == 1) {
          const double x0 = 0.5 * std::log(h0[fi](0, 0).real());
          const double x1 = 0.5 * std::log(h1[fi](0, 0).real());
          total += fa.scale * ((x1 - x0) * (x1 - x0) + 0.5 * std::norm(eta(0, 0)));
        } else {
          // a with a*a = h0; W-term is invariant under the residual unitary
          // freedom in that choice, take the principal square root.
          Mat a = sqrt_pd(h0[fi]).inverse() * eta * sqrt_pd(h0[fi]);
          // Ad_{a^{-1}} eta with a = h0^{1/2}
          total += fa.scale * spd_path_minimize(h0[fi], h1[fi], a, opt.grid,
                                                opt.rel_tol, opt.max_sweeps);
        }
        break;
      }
      case FactorKind::Torus: {
        for (int r = 0; r < fa.n; ++r) {
          const double x0 = 0.5 * std::log(h0[fi](r, 0).real());
          const double x1 = 0.5 * std::log(h1[fi](r, 0).real());
          total += fa.scale * ((x1 - x0) * (x1 - x0) + 0.5 * std::norm(eta(r, 0)));
        }
        break;
      }
      case FactorKind::Vector: {
        VecR d = (h1[fi] - h0[fi]).real();
        total += fa.scale * (d.squaredNorm() + 0.5 * eta.squaredNorm());
        break;
      }
    }
  }
  return total;
}

double energy_potential(const CotangentPoint& c, const PathEnergyOptions& opt) {
  const GroupSpec& g = c.group;
  std::vector<Mat> h0, h1;
  for (int f = 0; f < g.factor_count(); ++f) {
    const auto& fa = g.factor(f);
    const size_t fi = static_cast<size_t>(f);
    const Mat& q = c.Q.blocks[fi];
    switch (fa.kind) {
      case FactorKind::Unitary: {
        h0.push_back(Mat::Identity(fa.n, fa.n));
        h1.push_back((q * q.adjoint()).inverse());
        break;
      }
      case FactorKind::Torus: {
        Mat e0 = Mat::Ones(fa.n, 1);
        Mat e1(fa.n, 1);
        for (int r = 0; r < fa.n; ++r) e1(r, 0) = 1.0 / std::norm(q(r, 0));
        h0.push_back(e0);
        h1.push_back(e1);
        break;
      }
      case FactorKind::Vector: {
        h0.push_back(Mat::Zero(fa.n, 1));
        Mat x1 = (-q).imag().cast<cxd>();
        h1.push_back(x1);
        break;
      }
    }
  }
  return path_energy_min(c, h0, h1, opt);
}

}  // namespace hkq
