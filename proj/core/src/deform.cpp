#include "hkq/deform.hpp"

#include <Eigen/QR>
#include <cmath>

namespace hkq {

// --- eta and the correspondence -----------------------------------------------------

AlgebraElement solve_eta(const ActionSpec& spec, const Point& x, const VecC& zetaC,
                         double pre_tol, double resid_tol) {
  require(zetaC.size() == spec.H.dim(), "solve_eta: zeta dimension");
  require(rho_bar_rank(spec) == spec.G.dim(),
          "solve_eta: rho_bar is not surjective");
  MomentValue m = moment_hat(spec, x);
  VecC rhs = m.c - zetaC;
  // precondition: iota^* (mu_hat_C - zeta_C) = 0
  const double pre = (spec.hrho.basis.transpose().cast<cxd>() * rhs).norm();
  require(pre < pre_tol, "solve_eta: x is not on the complex level set (residual " +
                             std::to_string(pre) + ")");
  Mat A = (spec.R1 - spec.R0).transpose().cast<cxd>();
  VecC e = A.colPivHouseholderQr().solve(rhs);
  const double resid = (A * e - rhs).norm();
  require(resid < resid_tol, "solve_eta: linear system residual too large");
  return from_coords_c(spec.G, e);
}

DeformPair psi_hat(const ActionSpec& spec, const Point& x, const MomentValue& zeta,
                   double pre_tol) {
  DeformPair dp;
  dp.x = x;
  dp.zeta = zeta;
  dp.image.group = spec.G;
  dp.image.Q = identity_element(spec.G, true);
  dp.image.eta = solve_eta(spec, x, zeta.c, pre_tol);
  // invariant: sigma_C(image) = zeta_C
  MomentValue sig = sigma_moment(spec, x, nu_complex(dp.image));
  require((sig.c - zeta.c).norm() < 1e-10, "psi_hat: sigma_C invariant violated");
  return dp;
}

namespace {

// Section of rho_bar: h in H^C with rho(h) = (h0, h1) and h0 h1^{-1} = Q.
GroupElement rho_section(const ActionSpec& spec, const GroupElement& Q) {
  GroupElement h = identity_element(spec.H, true);
  switch (spec.kind) {
    case PresetKind::Hilbert:
    case PresetKind::Quiver: {
      // telescoping along each vertex chain, last copy pinned to 1
      for (int f = static_cast<int>(spec.gidx0.size()) - 1; f >= 0; --f) {
        const size_t i0 = static_cast<size_t>(spec.gidx0[static_cast<size_t>(f)]);
        const size_t i1 = static_cast<size_t>(spec.gidx1[static_cast<size_t>(f)]);
        h.blocks[i0] = Q.blocks[static_cast<size_t>(f)] * h.blocks[i1];
      }
      break;
    }
    case PresetKind::Toric: {
      h.blocks[0] = spec.glift.cast<cxd>() * Q.blocks[0];
      break;
    }
    case PresetKind::Modification: {
      VecC ang(spec.G.dim());
      for (int b = 0; b < spec.G.dim(); ++b) ang(b) = -std::log(Q.blocks[0](b, 0));
      VecC hang = spec.glift.cast<cxd>() * ang;
      for (int a = 0; a < spec.H.dim(); ++a) h.blocks[0](a, 0) = std::exp(hang(a));
      break;
    }
  }
  return h;
}

}  // namespace

PsiInverseResult psi_inverse(const ActionSpec& spec, const Point& x,
                             const CotangentPoint& cot, const VecC& zetaC,
                             double pre_tol) {
  GroupElement h = rho_section(spec, cot.Q);
  auto [h0, h1] = rho_group(spec, h);
  // section exactness: h0 h1^{-1} = Q
  GroupElement qh = mul(h0, inverse(h1));
  for (size_t f = 0; f < qh.blocks.size(); ++f)
    require((qh.blocks[f] - cot.Q.blocks[f]).norm() < 1e-8 * (1.0 + cot.Q.blocks[f].norm()),
            "psi_inverse: section defect");
  PsiInverseResult out;
  out.h = h;
  out.x = act(spec, inverse(h), x);
  // h^{-1} x lies on the mu_C level set and its eta is Ad_{h0^{-1}} eta
  AlgebraElement eta_back = solve_eta(spec, out.x, zetaC, pre_tol);
  AlgebraElement expected = Ad(inverse(h0), cot.eta);
  require(norm(add(complexify(eta_back), scale(expected, -1.0))) <
              1e-6 * (1.0 + norm(expected)),
          "psi_inverse: round-trip eta mismatch");
  return out;
}

NahmPath parameter_shift(const ActionSpec& spec, const MomentValue& zeta,
                         const MomentValue& zetap, const NahmPath& path) {
  require(path.group == spec.G, "parameter_shift: path group mismatch");
  VecR dre = zetap.re - zeta.re;
  VecC dc = zetap.c - zeta.c;
  const double iota_defect =
      (spec.hrho.basis.transpose() * dre).norm() +
      (spec.hrho.basis.transpose().cast<cxd>() * dc).norm();
  require(iota_defect < 1e-10, "parameter_shift: iota^* zeta != iota^* zeta'");

  // rho^*(A, -A) = zeta' - zeta
  MatR Ar = (spec.R0 - spec.R1).transpose();
  VecR a1 = Ar.colPivHouseholderQr().solve(dre);
  require((Ar * a1 - dre).norm() < 1e-10, "parameter_shift: real solve residual");
  Mat Ac = Ar.cast<cxd>();
  VecC ac = Ac.colPivHouseholderQr().solve(dc);
  require((Ac * ac - dc).norm() < 1e-10, "parameter_shift: complex solve residual");

  AlgebraElement A1 = from_coords(spec.G, a1);
  AlgebraElement A2 = from_coords(spec.G, VecR(ac.real()));
  AlgebraElement A3 = from_coords(spec.G, VecR(ac.imag()));
  NahmPath out = path;
  for (auto& smp : out.samples) {
    smp[1] = add(smp[1], A1);
    smp[2] = add(smp[2], A2);
    smp[3] = add(smp[3], A3);
  }
  return out;
}

namespace {

VecC flatten_point_local(const Point& p) {
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

VecC flatten_algebra(const AlgebraElement& u) {
  int total = 0;
  for (const auto& b : u.blocks) total += static_cast<int>(b.size());
  VecC v(total);
  int at = 0;
  for (const auto& b : u.blocks)
    for (int j = 0; j < b.size(); ++j) v(at++) = b.data()[j];
  return v;
}

}  // namespace

int psihat_stab_dim_c(const ActionSpec& spec, const Point& x,
                      const AlgebraElement& eta, double tol) {
  const int d = spec.H.dim();
  const int pm = static_cast<int>(flatten_point_local(x).size());
  const int dg = spec.G.dim();
  const int ge = static_cast<int>(flatten_algebra(eta).size());
  Mat K(pm + dg + ge, d);
  for (int a = 0; a < d; ++a) {
    AlgebraElement ba = basis_element(spec.H, a);
    K.col(a).head(pm) = flatten_point_local(inf_act(spec, ba, x));
    VecR ca = coords(ba);
    K.col(a).segment(pm, dg) = ((spec.R0 - spec.R1) * ca).cast<cxd>();
    AlgebraElement rho0 = from_coords(spec.G, VecR(spec.R0 * ca));
    K.col(a).tail(ge) = flatten_algebra(bracket(complexify(rho0), eta));
  }
  return static_cast<int>(kernel_basis_c(K, tol).cols());
}

// --- chart geometry -------------------------------------------------------------------

namespace {

struct ChartFrame {
  const ActionSpec* spec;
  const ChartPoint* p;
  std::vector<int> pairs;
  int k = 0;

  int dim() const {
    int d = 0;
    for (int m : pairs) {
      const auto& b = spec->shape[static_cast<size_t>(m)];
      d += 4 * b.rows * b.cols;  // Re/Im of z and w entries
    }
    if (p->has_chart) d += 4 * k;
    return d;
  }

  ChartTangent decode(const VecR& v) const {
    ChartTangent t;
    t.X = zero_point(*spec);
    int at = 0;
    for (int m : pairs) {
      Mat& z = t.X.z[static_cast<size_t>(m)];
      Mat& w = t.X.w[static_cast<size_t>(m)];
      for (int j = 0; j < z.size(); ++j) {
        z.data()[j] = cxd(v(at), v(at + 1));
        at += 2;
      }
      for (int j = 0; j < w.size(); ++j) {
        w.data()[j] = cxd(v(at), v(at + 1));
        at += 2;
      }
    }
    if (p->has_chart) {
      t.dalpha = v.segment(at, k);
      t.dy1 = v.segment(at + k, k);
      t.dy2 = v.segment(at + 2 * k, k);
      t.dy3 = v.segment(at + 3 * k, k);
    } else {
      t.dalpha = t.dy1 = t.dy2 = t.dy3 = VecR::Zero(k);
    }
    return t;
  }

  VecR encode(const ChartTangent& t) const {
    VecR v(dim());
    int at = 0;
    for (int m : pairs) {
      const Mat& z = t.X.z[static_cast<size_t>(m)];
      const Mat& w = t.X.w[static_cast<size_t>(m)];
      for (int j = 0; j < z.size(); ++j) {
        v(at) = z.data()[j].real();
        v(at + 1) = z.data()[j].imag();
        at += 2;
      }
      for (int j = 0; j < w.size(); ++j) {
        v(at) = w.data()[j].real();
        v(at + 1) = w.data()[j].imag();
        at += 2;
      }
    }
    if (p->has_chart) {
      v.segment(at, k) = t.dalpha;
      v.segment(at + k, k) = t.dy1;
      v.segment(at + 2 * k, k) = t.dy2;
      v.segment(at + 3 * k, k) = t.dy3;
    }
    return v;
  }
};

ChartFrame make_frame(const ActionSpec& spec, const ChartPoint& p) {
  ChartFrame fr;
  fr.spec = &spec;
  fr.p = &p;
  fr.pairs = p.active_pairs;
  if (fr.pairs.empty())
    for (int m = 0; m < static_cast<int>(spec.shape.size()); ++m) fr.pairs.push_back(m);
  fr.k = static_cast<int>(p.alpha.size());
  return fr;
}

}  // namespace

double chart_metric(const ChartPoint& p, const ChartTangent& a, const ChartTangent& b) {
  double s = metric(a.X, b.X);
  if (p.has_chart)
    s += a.dalpha.dot(b.dalpha) + a.dy1.dot(b.dy1) + a.dy2.dot(b.dy2) + a.dy3.dot(b.dy3);
  return s;
}

double chart_form(int axis, const ChartPoint& p, const ChartTangent& a,
                  const ChartTangent& b) {
  double s = symplectic_form(axis, a.X, b.X);
  if (!p.has_chart) return s;
  switch (axis) {
    case 1:
      s += a.dalpha.dot(b.dy1) - b.dalpha.dot(a.dy1) + a.dy2.dot(b.dy3) - b.dy2.dot(a.dy3);
      break;
    case 2:
      s += a.dalpha.dot(b.dy2) - b.dalpha.dot(a.dy2) + a.dy3.dot(b.dy1) - b.dy3.dot(a.dy1);
      break;
    case 3:
      s += a.dalpha.dot(b.dy3) - b.dalpha.dot(a.dy3) + a.dy1.dot(b.dy2) - b.dy1.dot(a.dy2);
      break;
    default:
      throw Error("chart_form: axis must be 1..3");
  }
  return s;
}

cxd chart_form_c(const ChartPoint& p, const ChartTangent& a, const ChartTangent& b) {
  return cxd(chart_form(2, p, a, b), chart_form(3, p, a, b));
}

ChartTangent killing_tangent(const ActionSpec& spec, const ChartPoint& p,
                             const AlgebraElement& xi) {
  ChartTangent t;
  t.X = inf_act(spec, xi, p.x);
  const int k = static_cast<int>(p.alpha.size());
  t.dalpha = t.dy1 = t.dy2 = t.dy3 = VecR::Zero(k);
  if (p.has_chart) {
    VecR c = coords(xi);
    AlgebraElement rho0 = from_coords(spec.G, VecR(spec.R0 * c));
    AlgebraElement rho1 = from_coords(spec.G, VecR(spec.R1 * c));
    // chart requires diagonal rho(xi)
    for (const AlgebraElement* r : {&rho0, &rho1}) {
      for (const auto& blk : r->blocks) {
        if (blk.cols() > 1) {
          Mat off = blk;
          off.diagonal().setZero();
          require(off.norm() < 1e-12, "killing_tangent: rho(xi) must be diagonal");
        }
      }
    }
    auto imdiag = [&](const AlgebraElement& r) {
      VecR d(k);
      int at = 0;
      for (const auto& blk : r.blocks) {
        const int nn = blk.cols() > 1 ? static_cast<int>(blk.rows()) : static_cast<int>(blk.size());
        for (int j = 0; j < nn && at < k; ++j)
          d(at++) = blk.cols() > 1 ? blk(j, j).imag() : blk(j, 0).imag();
      }
      return d;
    };
    t.dalpha = imdiag(rho0) - imdiag(rho1);
  }
  return t;
}

QuotientChart quotient_metric_at(const ActionSpec& spec, const SubAlgebra& L,
                                 const ChartPoint& p, double tol) {
  ChartFrame fr = make_frame(spec, p);
  const int D = fr.dim();
  const int dl = L.dim();

  std::vector<ChartTangent> coord_basis;
  coord_basis.reserve(static_cast<size_t>(D));
  for (int j = 0; j < D; ++j) coord_basis.push_back(fr.decode(VecR::Unit(D, j)));

  std::vector<ChartTangent> killing;
  for (int a = 0; a < dl; ++a)
    killing.push_back(killing_tangent(spec, p, embed(L, VecR::Unit(dl, a))));

  MatR kgram(dl, dl);
  for (int a = 0; a < dl; ++a)
    for (int b = 0; b < dl; ++b)
      kgram(a, b) = chart_metric(p, killing[static_cast<size_t>(a)], killing[static_cast<size_t>(b)]);
  const int krank = rank_of(kgram, tol);
  if (krank > 0 && krank < dl)
    throw Error("quotient_metric_at: Killing rank deficiency (orbifold locus)");

  MatR rows(3 * dl + (krank > 0 ? dl : 0), D);
  for (int a = 0; a < dl; ++a)
    for (int axis = 1; axis <= 3; ++axis)
      for (int j = 0; j < D; ++j)
        rows((axis - 1) * dl + a, j) =
            chart_form(axis, p, killing[static_cast<size_t>(a)], coord_basis[static_cast<size_t>(j)]);
  if (krank > 0)
    for (int a = 0; a < dl; ++a)
      for (int j = 0; j < D; ++j)
        rows(3 * dl + a, j) =
            chart_metric(p, killing[static_cast<size_t>(a)], coord_basis[static_cast<size_t>(j)]);

  MatR hbasis = kernel_basis(rows, tol);
  QuotientChart qc;
  qc.killing_rank = krank;
  const int hd = static_cast<int>(hbasis.cols());
  for (int i = 0; i < hd; ++i) qc.basis.push_back(fr.decode(VecR(hbasis.col(i))));
  qc.gram.resize(hd, hd);
  for (int i = 0; i < hd; ++i)
    for (int j = 0; j < hd; ++j)
      qc.gram(i, j) = chart_metric(p, qc.basis[static_cast<size_t>(i)], qc.basis[static_cast<size_t>(j)]);
  return qc;
}

QuotientForms quotient_forms_at(const ActionSpec& spec, const SubAlgebra& L,
                                const ChartPoint& p, double tol) {
  QuotientChart qc = quotient_metric_at(spec, L, p, tol);
  const int hd = static_cast<int>(qc.basis.size());
  QuotientForms qf;
  qf.omega1.resize(hd, hd);
  qf.omega2.resize(hd, hd);
  qf.omega3.resize(hd, hd);
  qf.omega_c.resize(hd, hd);
  for (int i = 0; i < hd; ++i)
    for (int j = 0; j < hd; ++j) {
      qf.omega1(i, j) = chart_form(1, p, qc.basis[static_cast<size_t>(i)], qc.basis[static_cast<size_t>(j)]);
      qf.omega2(i, j) = chart_form(2, p, qc.basis[static_cast<size_t>(i)], qc.basis[static_cast<size_t>(j)]);
      qf.omega3(i, j) = chart_form(3, p, qc.basis[static_cast<size_t>(i)], qc.basis[static_cast<size_t>(j)]);
      qf.omega_c(i, j) = cxd(qf.omega2(i, j), qf.omega3(i, j));
    }
  return qf;
}

// --- Hilbert diagonal chart ---------------------------------------------------------

void hilb_tau(const VecC& a, const VecC& b, VecR& t1, VecR& t2, VecR& t3) {
  const int k = static_cast<int>(a.size());
  t1.resize(k);
  t2.resize(k);
  t3.resize(k);
  for (int j = 0; j < k; ++j) {
    t1(j) = std::norm(a(j)) - std::norm(b(j));
    const cxd ab = a(j) * b(j);
    t2(j) = 2.0 * ab.real();
    t3(j) = 2.0 * ab.imag();
  }
}

ChartPoint hilb_sigma_zero_chart(const ActionSpec& spec, const VecC& a, const VecC& b,
                                 const VecR& theta) {
  require(spec.kind == PresetKind::Hilbert, "hilb_sigma_zero_chart: Hilbert preset");
  const int k = spec.hilbert_k;
  require(a.size() == k && b.size() == k && theta.size() == k,
          "hilb_sigma_zero_chart: size mismatch");
  ChartPoint p;
  p.x = zero_point(spec);
  p.x.z[0] = a.asDiagonal();
  p.x.w[0] = b.asDiagonal();
  p.alpha = theta;
  hilb_tau(a, b, p.y1, p.y2, p.y3);
  p.has_chart = true;
  p.active_pairs = {0};
  return p;
}

SubAlgebra hilb_torus_subalgebra(const ActionSpec& spec) {
  require(spec.kind == PresetKind::Hilbert, "hilb_torus_subalgebra: Hilbert preset");
  const int k = spec.hilbert_k;
  MatR basis = MatR::Zero(spec.H.dim(), k);
  for (int j = 0; j < k; ++j) basis(j, j) = 1.0;  // i E_jj in the first factor
  return SubAlgebra{spec.H, basis};
}

// --- k = 1 Taub-NUT pipeline -----------------------------------------------------------

GHSample taubnut_sample(const ActionSpec& spec, cxd a, cxd b, double alpha) {
  require(spec.hilbert_k == 1, "taubnut_sample: k = 1 only");
  VecC av(1), bv(1);
  av << a;
  bv << b;
  VecR th(1);
  th << alpha;
  ChartPoint p = hilb_sigma_zero_chart(spec, av, bv, th);
  SubAlgebra L = hilb_torus_subalgebra(spec);
  QuotientChart qc = quotient_metric_at(spec, L, p);
  require(qc.basis.size() == 4, "taubnut_sample: horizontal space must be 4-dim");

  // residual S^1: rotation of (a, b) alone, a level tangent
  ChartTangent F;
  F.X = zero_point(spec);
  F.X.z[0](0, 0) = kI * a;
  F.X.w[0](0, 0) = -kI * b;
  F.dalpha = F.dy1 = F.dy2 = F.dy3 = VecR::Zero(1);

  const int hd = 4;
  VecR v(hd);
  for (int i = 0; i < hd; ++i) v(i) = chart_metric(p, F, qc.basis[static_cast<size_t>(i)]);
  VecR gamma = qc.gram.ldlt().solve(v);
  const double fiber2 = gamma.dot(qc.gram * gamma);
  require(fiber2 > 0, "taubnut_sample: degenerate fiber");

  GHSample out;
  out.V = 1.0 / fiber2;
  out.r = std::sqrt(p.y1.squaredNorm() + p.y2.squaredNorm() + p.y3.squaredNorm());

  // base block: horizontal vectors with prescribed dy, orthogonal to the fiber
  MatR sys(4, 4);
  for (int col = 0; col < 4; ++col) {
    const auto& bt = qc.basis[static_cast<size_t>(col)];
    sys(0, col) = bt.dy1(0);
    sys(1, col) = bt.dy2(0);
    sys(2, col) = bt.dy3(0);
  }
  sys.row(3) = (qc.gram * gamma).transpose();
  Eigen::Matrix3d gbase;
  MatR sols(4, 3);
  for (int i = 0; i < 3; ++i) {
    VecR rhs = VecR::Zero(4);
    rhs(i) = 1.0;
    sols.col(i) = sys.colPivHouseholderQr().solve(rhs);
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      gbase(i, j) = sols.col(i).dot(qc.gram * sols.col(j));
  out.shape_resid = (gbase - out.V * Eigen::Matrix3d::Identity()).norm() / out.V;
  return out;
}

GHFit fit_gibbons_hawking(const GHSample& s1, const GHSample& s2) {
  GHFit f;
  f.m = (s1.V - s2.V) / (1.0 / s1.r - 1.0 / s2.r);
  f.lambda = s1.V - f.m / s1.r;
  return f;
}

ChartPoint psi_match_k1(const ActionSpec& spec, cxd a, cxd b) {
  require(spec.hilbert_k == 1, "psi_match_k1: k = 1 only");
  const double a2 = std::norm(a), b2 = std::norm(b);
  // root of u = e^{-2u} |a|^2 - e^{2u} |b|^2  (strictly decreasing right side)
  auto phi = [&](double u) { return u - std::exp(-2 * u) * a2 + std::exp(2 * u) * b2; };
  double lo = -1, hi = 1;
  while (phi(lo) > 0) lo *= 2;
  while (phi(hi) < 0) hi *= 2;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) <= 0 ? lo : hi) = mid;
  }
  double u = 0.5 * (lo + hi);
  for (int it = 0; it < 8; ++it) {  // Newton polish
    const double e2 = std::exp(-2 * u) * a2, f2 = std::exp(2 * u) * b2;
    u -= (u - e2 + f2) / (1.0 + 2 * e2 + 2 * f2);
  }
  VecC av(1), bv(1);
  av << std::exp(-u) * a;
  bv << std::exp(u) * b;
  VecR th = VecR::Zero(1);
  return hilb_sigma_zero_chart(spec, av, bv, th);
}

}  // namespace hkq
