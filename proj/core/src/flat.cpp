#include "hkq/flat.hpp"

#include <cmath>

namespace hkq {

namespace {

MatR selection_matrix(const GroupSpec& from, const GroupSpec& to,
                      const std::vector<int>& pick) {
  // picks factor `pick[f]` of `from` into factor f of `to`
  MatR R = MatR::Zero(to.dim(), from.dim());
  for (int f = 0; f < to.factor_count(); ++f) {
    const int src = pick[static_cast<size_t>(f)];
    if (src < 0) continue;
    const int off_to = to.dim_offset(f);
    const int off_from = from.dim_offset(src);
    for (int i = 0; i < to.factor(f).dim(); ++i) R(off_to + i, off_from + i) = 1.0;
  }
  return R;
}

void finalize_rho(ActionSpec& spec) {
  spec.hrho = SubAlgebra{spec.H, kernel_basis(MatR(spec.R0 - spec.R1))};
}

}  // namespace

// --- presets ----------------------------------------------------------------------

ActionSpec hilbert_preset(int k) {
  require(k >= 1, "hilbert_preset: k >= 1");
  ActionSpec s;
  s.kind = PresetKind::Hilbert;
  s.hilbert_k = k;
  s.H = GroupSpec::unitary(k).times(GroupSpec::unitary(k));
  s.G = GroupSpec::unitary(k);
  s.shape = {PairBlock{k, k}, PairBlock{k, 1}};
  s.bipairs = {ActionSpec::BiPair{0, 1}, ActionSpec::BiPair{0, -1}};
  s.R0 = selection_matrix(s.H, s.G, {0});
  s.R1 = selection_matrix(s.H, s.G, {1});
  s.gidx0 = {0};
  s.gidx1 = {1};
  finalize_rho(s);
  return s;
}

ActionSpec quiver_preset(const QuiverInput& in) {
  const int nv = in.num_vertices;
  const int nt = static_cast<int>(in.pi.size());
  require(nv >= 1 && nt >= nv, "quiver_preset: bad vertex data");
  require(static_cast<int>(in.vdim.size()) == nv, "quiver_preset: vdim size");

  // labels pi^{-1}(k) = {k_1, ..., k_{N_k}} ordered by V~ index
  std::vector<std::vector<int>> labels(static_cast<size_t>(nv));
  for (int t = 0; t < nt; ++t) {
    const int k = in.pi[static_cast<size_t>(t)];
    require(k >= 0 && k < nv, "quiver_preset: pi out of range");
    labels[static_cast<size_t>(k)].push_back(t);
  }
  for (int k = 0; k < nv; ++k)
    require(!labels[static_cast<size_t>(k)].empty(), "quiver_preset: pi not surjective");

  ActionSpec s;
  s.kind = PresetKind::Quiver;
  s.quiver = in;

  std::vector<Factor> hf;
  for (int t = 0; t < nt; ++t)
    hf.push_back(Factor{FactorKind::Unitary, in.vdim[static_cast<size_t>(in.pi[static_cast<size_t>(t)])], 1.0});
  s.H = GroupSpec(hf);

  // G = prod_{k in V'} U(v_k)^{N_k - 1}
  std::vector<Factor> gf;
  for (int k = 0; k < nv; ++k) {
    const int copies = static_cast<int>(labels[static_cast<size_t>(k)].size());
    for (int j = 0; j + 1 < copies; ++j) {
      gf.push_back(Factor{FactorKind::Unitary, in.vdim[static_cast<size_t>(k)], 1.0});
      s.gidx0.push_back(labels[static_cast<size_t>(k)][static_cast<size_t>(j)]);
      s.gidx1.push_back(labels[static_cast<size_t>(k)][static_cast<size_t>(j + 1)]);
    }
  }
  s.G = gf.empty() ? GroupSpec() : GroupSpec(gf);

  for (const auto& [st, tt] : in.edges) {
    require(st >= 0 && st < nt && tt >= 0 && tt < nt, "quiver_preset: edge out of range");
    const int vs = in.vdim[static_cast<size_t>(in.pi[static_cast<size_t>(st)])];
    const int vt = in.vdim[static_cast<size_t>(in.pi[static_cast<size_t>(tt)])];
    s.shape.push_back(PairBlock{vt, vs});   // A_h : C^{v_s} -> C^{v_t}
    s.bipairs.push_back(ActionSpec::BiPair{tt, st});
  }

  s.R0 = selection_matrix(s.H, s.G, s.gidx0);
  s.R1 = selection_matrix(s.H, s.G, s.gidx1);
  finalize_rho(s);
  return s;
}

ActionSpec toric_preset(const Eigen::MatrixXi& kZ) {
  const int N = static_cast<int>(kZ.cols());
  const int r = static_cast<int>(kZ.rows());
  require(N >= 1 && r >= 0 && r <= N, "toric_preset: bad k_Z");

  ActionSpec s;
  s.kind = PresetKind::Toric;
  s.H = GroupSpec::vector_group(N);
  const MatR k_span = kZ.cast<double>().transpose();  // N x r
  const MatR kperp = kernel_basis(MatR(k_span.transpose()));  // N x (N - r)
  const int m = static_cast<int>(kperp.cols());
  require(m >= 1, "toric_preset: k_Z must be a proper submodule");
  s.G = GroupSpec::vector_group(m);

  s.shape.assign(static_cast<size_t>(N), PairBlock{1, 1});
  s.wmat = -2.0 * M_PI * MatR::Identity(N, N);  // z_j e^{-2 pi i t_j}

  s.R0 = kperp.transpose();  // g-coordinates of v mod k
  s.R1 = MatR::Zero(m, N);
  s.glift = kperp;
  finalize_rho(s);
  return s;
}

ActionSpec modification_preset(const Eigen::MatrixXi& weights,
                               const Eigen::MatrixXi& normal) {
  const int N = static_cast<int>(weights.rows());
  const int k = static_cast<int>(weights.cols());
  require(N >= 1 && k >= 1, "modification_preset: bad weights");
  require(normal.cols() == k, "modification_preset: normal basis width");

  ActionSpec s;
  s.kind = PresetKind::Modification;
  s.H = GroupSpec::torus(k);
  const MatR n_span = normal.cast<double>().transpose();  // k x r
  const MatR nperp = kernel_basis(MatR(n_span.transpose()));
  const int m = static_cast<int>(nperp.cols());
  require(m >= 1, "modification_preset: normal subgroup must be proper");
  s.G = GroupSpec::torus(m);

  s.shape.assign(static_cast<size_t>(N), PairBlock{1, 1});
  s.wmat = weights.cast<double>();

  // rho(h) = (1, h H_rho)
  s.R0 = MatR::Zero(m, k);
  s.R1 = nperp.transpose();
  s.glift = nperp;
  finalize_rho(s);
  return s;
}

int expected_hrho_dim(const ActionSpec& spec) {
  switch (spec.kind) {
    case PresetKind::Hilbert:
      return spec.hilbert_k * spec.hilbert_k;
    case PresetKind::Quiver: {
      int d = 0;
      for (int v : spec.quiver.vdim) d += v * v;
      return d;
    }
    case PresetKind::Toric:
    case PresetKind::Modification:
      return spec.H.dim() - spec.G.dim();
  }
  return -1;
}

// --- points -----------------------------------------------------------------------

Point zero_point(const ActionSpec& spec) {
  Point x;
  for (const auto& b : spec.shape) {
    x.z.push_back(Mat::Zero(b.rows, b.cols));
    x.w.push_back(Mat::Zero(b.cols, b.rows));
  }
  return x;
}

Point random_point(const ActionSpec& spec, Rng& rng, double sigma) {
  Point x;
  for (const auto& b : spec.shape) {
    x.z.push_back(sigma * rng.gaussian_matrix(b.rows, b.cols));
    x.w.push_back(sigma * rng.gaussian_matrix(b.cols, b.rows));
  }
  return x;
}

Point add(const Point& a, const Point& b) {
  Point c = a;
  for (size_t m = 0; m < c.z.size(); ++m) {
    c.z[m] += b.z[m];
    c.w[m] += b.w[m];
  }
  return c;
}

Point scale_point(const Point& a, cxd s) {
  Point c = a;
  for (size_t m = 0; m < c.z.size(); ++m) {
    c.z[m] *= s;
    c.w[m] *= s;
  }
  return c;
}

double enorm2(const Point& x) {
  double s = 0;
  for (size_t m = 0; m < x.z.size(); ++m) s += x.z[m].squaredNorm() + x.w[m].squaredNorm();
  return s;
}

// --- flat structure ------------------------------------------------------------------

double metric(const Point& x, const Point& y) {
  double s = 0;
  for (size_t m = 0; m < x.z.size(); ++m)
    s += (x.z[m].array() * y.z[m].array().conjugate()).sum().real() +
         (x.w[m].array() * y.w[m].array().conjugate()).sum().real();
  return 2.0 * s;
}

Point apply_complex_structure(int axis, const Point& x) {
  Point y = x;
  for (size_t m = 0; m < x.z.size(); ++m) {
    switch (axis) {
      case 1:
        y.z[m] = kI * x.z[m];
        y.w[m] = kI * x.w[m];
        break;
      case 2:
        y.z[m] = kI * x.w[m].adjoint();
        y.w[m] = -kI * x.z[m].adjoint();
        break;
      case 3:
        y.z[m] = -x.w[m].adjoint();
        y.w[m] = x.z[m].adjoint();
        break;
      default:
        throw Error("apply_complex_structure: axis must be 1, 2 or 3");
    }
  }
  return y;
}

double symplectic_form(int axis, const Point& x, const Point& y) {
  return metric(apply_complex_structure(axis, x), y);
}

cxd symplectic_c(const Point& x, const Point& y) {
  cxd s = 0;
  for (size_t m = 0; m < x.z.size(); ++m)
    s += (x.z[m] * y.w[m]).trace() - (y.z[m] * x.w[m]).trace();
  return 2.0 * kI * s;
}

Frame frame_from_axis(const Eigen::Vector3d& y) {
  require(std::abs(y.norm() - 1.0) < 1e-12, "frame_from_axis: |y| must be 1");
  Eigen::Vector3d a = std::abs(y.x()) < 0.9 ? Eigen::Vector3d::UnitX()
                                            : Eigen::Vector3d::UnitY();
  Eigen::Vector3d yp = (a - y * y.dot(a)).normalized();
  Eigen::Vector3d ypp = y.cross(yp);
  Frame fr;
  fr.rot.row(0) = y;
  fr.rot.row(1) = yp;
  fr.rot.row(2) = ypp;
  return fr;
}

double symplectic_form(const Frame& fr, int axis, const Point& x, const Point& y) {
  double s = 0;
  for (int j = 0; j < 3; ++j) {
    const double c = fr.rot(axis - 1, j);
    if (c != 0.0) s += c * symplectic_form(j + 1, x, y);
  }
  return s;
}

MomentValue rotate_moment(const Frame& fr, const MomentValue& m) {
  MomentValue out = m;
  const VecR m1 = m.re, m2 = m.c.real(), m3 = m.c.imag();
  const auto& R = fr.rot;
  out.re = R(0, 0) * m1 + R(0, 1) * m2 + R(0, 2) * m3;
  VecR o2 = R(1, 0) * m1 + R(1, 1) * m2 + R(1, 2) * m3;
  VecR o3 = R(2, 0) * m1 + R(2, 1) * m2 + R(2, 2) * m3;
  out.c = o2.cast<cxd>() + kI * o3.cast<cxd>();
  return out;
}

// --- group action -----------------------------------------------------------------

namespace {

// Torus element entries raised to integer powers; vector factors use
// exp(i (W v)_j). Returns the per-coordinate multiplier vector.
VecC diagonal_multipliers(const ActionSpec& spec, const GroupElement& h) {
  const int N = static_cast<int>(spec.shape.size());
  VecC mult(N);
  if (spec.H.factor(0).kind == FactorKind::Vector) {
    VecC v = h.blocks[0].col(0);
    VecC wv = spec.wmat.cast<cxd>() * v;
    for (int j = 0; j < N; ++j) mult(j) = std::exp(kI * wv(j));
  } else {
    for (int j = 0; j < N; ++j) {
      cxd p = 1.0;
      for (int a = 0; a < spec.wmat.cols(); ++a) {
        const double wja = spec.wmat(j, a);
        const long wi = std::lround(wja);
        require(std::abs(wja - static_cast<double>(wi)) < 1e-12,
                "diagonal action: torus weights must be integers");
        const cxd u = h.blocks[0](a, 0);
        if (wi >= 0)
          for (long t = 0; t < wi; ++t) p *= u;
        else
          for (long t = 0; t < -wi; ++t) p /= u;
      }
      mult(j) = p;
    }
  }
  return mult;
}

}  // namespace

Point act(const ActionSpec& spec, const GroupElement& h, const Point& x) {
  require(h.group == spec.H, "act: group mismatch");
  Point y = x;
  if (spec.kind == PresetKind::Hilbert || spec.kind == PresetKind::Quiver) {
    for (size_t m = 0; m < x.z.size(); ++m) {
      const auto& bp = spec.bipairs[m];
      Mat zl = bp.left >= 0 ? h.blocks[static_cast<size_t>(bp.left)] : Mat();
      Mat zr = bp.right >= 0 ? h.blocks[static_cast<size_t>(bp.right)].inverse() : Mat();
      Mat z = x.z[m], w = x.w[m];
      if (bp.left >= 0) {
        z = zl * z;
        w = w * zl.inverse();
      }
      if (bp.right >= 0) {
        z = z * zr;
        w = zr.inverse() * w;
      }
      y.z[m] = z;
      y.w[m] = w;
    }
  } else {
    VecC mult = diagonal_multipliers(spec, h);
    for (size_t m = 0; m < x.z.size(); ++m) {
      y.z[m] = mult(static_cast<int>(m)) * x.z[m];
      y.w[m] = x.w[m] / mult(static_cast<int>(m));
    }
  }
  return y;
}

Point inf_act(const ActionSpec& spec, const AlgebraElement& xi, const Point& x) {
  require(xi.group == spec.H, "inf_act: group mismatch");
  Point y = zero_point(spec);
  if (spec.kind == PresetKind::Hilbert || spec.kind == PresetKind::Quiver) {
    for (size_t m = 0; m < x.z.size(); ++m) {
      const auto& bp = spec.bipairs[m];
      Mat z = Mat::Zero(x.z[m].rows(), x.z[m].cols());
      Mat w = Mat::Zero(x.w[m].rows(), x.w[m].cols());
      if (bp.left >= 0) {
        const Mat& xl = xi.blocks[static_cast<size_t>(bp.left)];
        z += xl * x.z[m];
        w -= x.w[m] * xl;
      }
      if (bp.right >= 0) {
        const Mat& xr = xi.blocks[static_cast<size_t>(bp.right)];
        z -= x.z[m] * xr;
        w += xr * x.w[m];
      }
      y.z[m] = z;
      y.w[m] = w;
    }
  } else {
    // multiplier derivative: z_j scales by i (W c)_j where c are the
    // coordinates of xi (imaginary entries for torus carry theta = c).
    const int N = static_cast<int>(spec.shape.size());
    VecC c(spec.wmat.cols());
    if (spec.H.factor(0).kind == FactorKind::Vector)
      c = xi.blocks[0].col(0);
    else
      c = -kI * xi.blocks[0].col(0);  // entries i theta_a -> theta_a
    VecC wv = spec.wmat.cast<cxd>() * c;
    for (int j = 0; j < N; ++j) {
      y.z[static_cast<size_t>(j)] = kI * wv(j) * x.z[static_cast<size_t>(j)];
      y.w[static_cast<size_t>(j)] = -kI * wv(j) * x.w[static_cast<size_t>(j)];
    }
  }
  return y;
}

std::pair<GroupElement, GroupElement> rho_group(const ActionSpec& spec,
                                                const GroupElement& h) {
  require(h.group == spec.H, "rho_group: group mismatch");
  GroupElement g0 = identity_element(spec.G, h.complexified);
  GroupElement g1 = identity_element(spec.G, h.complexified);
  switch (spec.kind) {
    case PresetKind::Hilbert:
    case PresetKind::Quiver: {
      for (size_t f = 0; f < spec.gidx0.size(); ++f) {
        g0.blocks[f] = h.blocks[static_cast<size_t>(spec.gidx0[f])];
        g1.blocks[f] = h.blocks[static_cast<size_t>(spec.gidx1[f])];
      }
      break;
    }
    case PresetKind::Toric: {
      g0.blocks[0] = spec.R0.cast<cxd>() * h.blocks[0];
      break;
    }
    case PresetKind::Modification: {
      // principal-branch angles; exact for elements near the identity
      VecC ang(spec.H.dim());
      for (int a = 0; a < spec.H.dim(); ++a) ang(a) = std::log(h.blocks[0](a, 0));
      VecC gb = spec.R1.cast<cxd>() * ang;
      for (int b = 0; b < spec.G.dim(); ++b) g1.blocks[0](b, 0) = std::exp(gb(b));
      break;
    }
  }
  return {g0, g1};
}

// --- moment maps --------------------------------------------------------------------

MomentValue moment_hat(const ActionSpec& spec, const Point& x) {
  const int d = spec.H.dim();
  MomentValue m = zero_moment(d, "H");
  for (int a = 0; a < d; ++a) {
    Point k = inf_act(spec, basis_element(spec.H, a), x);
    m.re(a) = 0.5 * symplectic_form(1, k, x);
    m.c(a) = 0.5 * symplectic_c(k, x);
  }
  return m;
}

MomentValue restrict_moment(const SubAlgebra& sub, const MomentValue& m) {
  MomentValue r;
  r.re = sub.basis.transpose() * m.re;
  r.c = sub.basis.transpose().cast<cxd>() * m.c;
  r.tag = m.tag + "|sub";
  return r;
}

MomentValue moment_restricted(const ActionSpec& spec, const Point& x) {
  return restrict_moment(spec.hrho, moment_hat(spec, x));
}

MomentValue rho_pullback(const ActionSpec& spec, const MomentValue& nu_gg) {
  const int dg = spec.G.dim();
  require(nu_gg.re.size() == 2 * dg, "rho_pullback: nu must live on G x G");
  MomentValue out = zero_moment(spec.H.dim(), "H");
  out.re = spec.R0.transpose() * nu_gg.re.head(dg) + spec.R1.transpose() * nu_gg.re.tail(dg);
  out.c = spec.R0.transpose().cast<cxd>() * nu_gg.c.head(dg) +
          spec.R1.transpose().cast<cxd>() * nu_gg.c.tail(dg);
  return out;
}

MomentValue sigma_moment(const ActionSpec& spec, const Point& x,
                         const MomentValue& nu_gg) {
  return add(moment_hat(spec, x), rho_pullback(spec, nu_gg));
}

// --- invariants -----------------------------------------------------------------------

namespace {

AlgebraElement rho_side(const ActionSpec& spec, const MatR& R, const AlgebraElement& u) {
  return from_coords(spec.G, VecR(R * coords(u)));
}

}  // namespace

double rho_homomorphism_defect(const ActionSpec& spec) {
  if (spec.G.dim() == 0) return 0.0;
  double worst = 0;
  const int d = spec.H.dim();
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b) {
      AlgebraElement u = basis_element(spec.H, a);
      AlgebraElement v = basis_element(spec.H, b);
      AlgebraElement br = bracket(u, v);
      for (const MatR* R : {&spec.R0, &spec.R1}) {
        AlgebraElement lhs = rho_side(spec, *R, br);
        AlgebraElement rhs = bracket(rho_side(spec, *R, u), rho_side(spec, *R, v));
        worst = std::max(worst, norm(add(lhs, scale(rhs, -1.0))));
      }
    }
  return worst;
}

int rho_bar_rank(const ActionSpec& spec, double tol) {
  return rank_of(MatR(spec.R0 - spec.R1), tol);
}

}  // namespace hkq
