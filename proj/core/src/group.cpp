#include "hkq/group.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

namespace hkq {

// --- common helpers ----------------------------------------------------------

MatR kernel_basis(const MatR& m, double tol) {
  if (m.rows() == 0) return MatR::Identity(m.cols(), m.cols());
  Eigen::JacobiSVD<MatR> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

Eigen::MatrixXcd kernel_basis_c(const Mat& m, double tol) {
  if (m.rows() == 0) return Mat::Identity(m.cols(), m.cols());
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return svd.matrixV().rightCols(m.cols() - rank);
}

int rank_of(const MatR& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<MatR> svd(m);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return rank;
}

int rank_of_c(const Mat& m, double tol) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return rank;
}

MatR span_basis(const MatR& m, double tol) {
  if (m.size() == 0) return MatR(m.rows(), 0);
  Eigen::JacobiSVD<MatR> svd(m, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > tol) ++rank;
  return svd.matrixU().leftCols(rank);
}

// --- GroupSpec ---------------------------------------------------------------

GroupSpec GroupSpec::unitary(int k, double scale) {
  require(k >= 1, "unitary factor needs k >= 1");
  return GroupSpec({Factor{FactorKind::Unitary, k, scale}});
}
GroupSpec GroupSpec::torus(int k, double scale) {
  require(k >= 1, "torus factor needs k >= 1");
  return GroupSpec({Factor{FactorKind::Torus, k, scale}});
}
GroupSpec GroupSpec::vector_group(int k, double scale) {
  require(k >= 1, "vector factor needs k >= 1");
  return GroupSpec({Factor{FactorKind::Vector, k, scale}});
}

GroupSpec GroupSpec::times(const GroupSpec& other) const {
  std::vector<Factor> f = factors_;
  f.insert(f.end(), other.factors_.begin(), other.factors_.end());
  return GroupSpec(std::move(f));
}

int GroupSpec::dim() const {
  int d = 0;
  for (const auto& f : factors_) d += f.dim();
  return d;
}

int GroupSpec::dim_offset(int f) const {
  int d = 0;
  for (int i = 0; i < f; ++i) d += factors_[static_cast<size_t>(i)].dim();
  return d;
}

bool GroupSpec::abelian() const {
  for (const auto& f : factors_)
    if (!f.abelian()) return false;
  return true;
}

// --- construction ------------------------------------------------------------

AlgebraElement zero_algebra(const GroupSpec& g, bool complexified) {
  AlgebraElement u;
  u.group = g;
  u.complexified = complexified;
  for (int f = 0; f < g.factor_count(); ++f) {
    const auto& fa = g.factor(f);
    if (fa.kind == FactorKind::Unitary)
      u.blocks.push_back(Mat::Zero(fa.n, fa.n));
    else
      u.blocks.push_back(Mat::Zero(fa.n, 1));
  }
  return u;
}

GroupElement identity_element(const GroupSpec& g, bool complexified) {
  GroupElement e;
  e.group = g;
  e.complexified = complexified;
  for (int f = 0; f < g.factor_count(); ++f) {
    const auto& fa = g.factor(f);
    switch (fa.kind) {
      case FactorKind::Unitary:
        e.blocks.push_back(Mat::Identity(fa.n, fa.n));
        break;
      case FactorKind::Torus:
        e.blocks.push_back(Mat::Ones(fa.n, 1));
        break;
      case FactorKind::Vector:
        e.blocks.push_back(Mat::Zero(fa.n, 1));
        break;
    }
  }
  return e;
}

AlgebraElement basis_element(const GroupSpec& g, int index) {
  require(index >= 0 && index < g.dim(), "basis index out of range");
  AlgebraElement u = zero_algebra(g);
  int f = 0;
  while (index >= g.factor(f).dim()) index -= g.factor(f++).dim();
  const auto& fa = g.factor(f);
  const double rs = 1.0 / std::sqrt(fa.scale);
  Mat& b = u.blocks[static_cast<size_t>(f)];
  switch (fa.kind) {
    case FactorKind::Unitary: {
      const int n = fa.n;
      if (index < n) {
        b(index, index) = kI * rs;
      } else {
        int r = index - n;  // two generators per pair (a,b), a < b
        int pair = r / 2;
        int a = 0, bb = 1;
        for (a = 0; a < n; ++a) {
          const int row = n - 1 - a;
          if (pair < row) {
            bb = a + 1 + pair;
            break;
          }
          pair -= row;
        }
        const double c = rs / std::sqrt(2.0);
        if (r % 2 == 0) {  // (E_ab - E_ba)/sqrt(2)
          b(a, bb) = c;
          b(bb, a) = -c;
        } else {  // i (E_ab + E_ba)/sqrt(2)
          b(a, bb) = kI * c;
          b(bb, a) = kI * c;
        }
      }
      break;
    }
    case FactorKind::Torus:
      b(index, 0) = kI * rs;
      break;
    case FactorKind::Vector:
      b(index, 0) = rs;
      break;
  }
  return u;
}

// --- coordinates / pairings ----------------------------------------------------

namespace {

double factor_inner(const Factor& fa, const Mat& a, const Mat& b) {
  // scale * Re tr(a b*) for all storage layouts
  return fa.scale * (a.array() * b.array().conjugate()).sum().real();
}

cxd factor_inner_c(const Factor& fa, const Mat& a, const Mat& b) {
  // C-bilinear extension: matrix/torus factors carry -scale tr(ab),
  // vector factors +scale sum(ab).
  if (fa.kind == FactorKind::Vector) return fa.scale * (a.array() * b.array()).sum();
  if (fa.kind == FactorKind::Torus) return -fa.scale * (a.array() * b.array()).sum();
  return -fa.scale * (a * b).trace();
}

}  // namespace

VecR coords(const AlgebraElement& u) {
  require(!u.complexified, "coords: use coords_c for complexified elements");
  const GroupSpec& g = u.group;
  VecR c(g.dim());
  for (int i = 0; i < g.dim(); ++i) {
    AlgebraElement b = basis_element(g, i);
    double v = 0;
    for (int f = 0; f < g.factor_count(); ++f)
      v += factor_inner(g.factor(f), b.blocks[static_cast<size_t>(f)],
                        u.blocks[static_cast<size_t>(f)]);
    c(i) = v;
  }
  return c;
}

VecC coords_c(const AlgebraElement& u) {
  const GroupSpec& g = u.group;
  VecC c(g.dim());
  for (int i = 0; i < g.dim(); ++i) {
    AlgebraElement b = basis_element(g, i);
    cxd v = 0;
    for (int f = 0; f < g.factor_count(); ++f)
      v += factor_inner_c(g.factor(f), b.blocks[static_cast<size_t>(f)],
                          u.blocks[static_cast<size_t>(f)]);
    c(i) = v;
  }
  return c;
}

AlgebraElement from_coords(const GroupSpec& g, const VecR& c) {
  require(c.size() == g.dim(), "from_coords: dimension mismatch");
  AlgebraElement u = zero_algebra(g);
  for (int i = 0; i < g.dim(); ++i) {
    if (c(i) == 0.0) continue;
    AlgebraElement b = basis_element(g, i);
    for (size_t f = 0; f < u.blocks.size(); ++f) u.blocks[f] += c(i) * b.blocks[f];
  }
  return u;
}

AlgebraElement from_coords_c(const GroupSpec& g, const VecC& c) {
  require(c.size() == g.dim(), "from_coords_c: dimension mismatch");
  AlgebraElement u = zero_algebra(g, true);
  for (int i = 0; i < g.dim(); ++i) {
    if (c(i) == 0.0) continue;
    AlgebraElement b = basis_element(g, i);
    for (size_t f = 0; f < u.blocks.size(); ++f) u.blocks[f] += c(i) * b.blocks[f];
  }
  return u;
}

// --- algebra ops ---------------------------------------------------------------

double inner(const AlgebraElement& u, const AlgebraElement& v) {
  require(u.group == v.group, "inner: group mismatch");
  require(!u.complexified && !v.complexified,
          "inner: use inner_c for complexified elements");
  double s = 0;
  for (int f = 0; f < u.group.factor_count(); ++f)
    s += factor_inner(u.group.factor(f), u.blocks[static_cast<size_t>(f)],
                      v.blocks[static_cast<size_t>(f)]);
  return s;
}

cxd inner_c(const AlgebraElement& u, const AlgebraElement& v) {
  require(u.group == v.group, "inner_c: group mismatch");
  cxd s = 0;
  for (int f = 0; f < u.group.factor_count(); ++f)
    s += factor_inner_c(u.group.factor(f), u.blocks[static_cast<size_t>(f)],
                        v.blocks[static_cast<size_t>(f)]);
  return s;
}

double norm(const AlgebraElement& u) {
  double s = 0;
  for (int f = 0; f < u.group.factor_count(); ++f) {
    const Mat& b = u.blocks[static_cast<size_t>(f)];
    s += u.group.factor(f).scale * b.squaredNorm();
  }
  return std::sqrt(s);
}

double hnorm2(const AlgebraElement& u) {
  double s = 0;
  for (int f = 0; f < u.group.factor_count(); ++f) {
    const Mat& b = u.blocks[static_cast<size_t>(f)];
    s += u.group.factor(f).scale * b.squaredNorm();
  }
  return s;
}

AlgebraElement add(const AlgebraElement& u, const AlgebraElement& v) {
  require(u.group == v.group, "add: group mismatch");
  AlgebraElement w = u;
  w.complexified = u.complexified || v.complexified;
  for (size_t f = 0; f < w.blocks.size(); ++f) w.blocks[f] += v.blocks[f];
  return w;
}

AlgebraElement scale(const AlgebraElement& u, cxd s) {
  AlgebraElement w = u;
  if (s.imag() != 0.0) w.complexified = true;
  for (auto& b : w.blocks) b *= s;
  return w;
}

AlgebraElement bracket(const AlgebraElement& u, const AlgebraElement& v) {
  require(u.group == v.group, "bracket: group mismatch");
  AlgebraElement w = zero_algebra(u.group, u.complexified || v.complexified);
  for (int f = 0; f < u.group.factor_count(); ++f) {
    if (u.group.factor(f).kind != FactorKind::Unitary) continue;  // abelian
    const size_t i = static_cast<size_t>(f);
    w.blocks[i] = u.blocks[i] * v.blocks[i] - v.blocks[i] * u.blocks[i];
  }
  return w;
}

AlgebraElement Ad(const GroupElement& g, const AlgebraElement& u) {
  require(g.group == u.group, "Ad: group mismatch");
  AlgebraElement w = u;
  w.complexified = u.complexified || g.complexified;
  for (int f = 0; f < g.group.factor_count(); ++f) {
    if (g.group.factor(f).kind != FactorKind::Unitary) continue;
    const size_t i = static_cast<size_t>(f);
    w.blocks[i] = g.blocks[i] * u.blocks[i] * g.blocks[i].inverse();
  }
  return w;
}

AlgebraElement complexify(const AlgebraElement& u) {
  AlgebraElement w = u;
  w.complexified = true;
  return w;
}

// --- group ops -----------------------------------------------------------------

GroupElement mul(const GroupElement& a, const GroupElement& b) {
  require(a.group == b.group, "mul: group mismatch");
  GroupElement c = a;
  c.complexified = a.complexified || b.complexified;
  for (int f = 0; f < a.group.factor_count(); ++f) {
    const size_t i = static_cast<size_t>(f);
    switch (a.group.factor(f).kind) {
      case FactorKind::Unitary:
        c.blocks[i] = a.blocks[i] * b.blocks[i];
        break;
      case FactorKind::Torus:
        c.blocks[i] = a.blocks[i].cwiseProduct(b.blocks[i]);
        break;
      case FactorKind::Vector:
        c.blocks[i] = a.blocks[i] + b.blocks[i];
        break;
    }
  }
  return c;
}

GroupElement inverse(const GroupElement& g) {
  GroupElement h = g;
  for (int f = 0; f < g.group.factor_count(); ++f) {
    const size_t i = static_cast<size_t>(f);
    switch (g.group.factor(f).kind) {
      case FactorKind::Unitary:
        h.blocks[i] = g.blocks[i].inverse();
        break;
      case FactorKind::Torus:
        h.blocks[i] = g.blocks[i].cwiseInverse();
        break;
      case FactorKind::Vector:
        h.blocks[i] = -g.blocks[i];
        break;
    }
  }
  return h;
}

GroupElement adjoint_element(const GroupElement& g) {
  GroupElement h = g;
  for (int f = 0; f < g.group.factor_count(); ++f) {
    const size_t i = static_cast<size_t>(f);
    switch (g.group.factor(f).kind) {
      case FactorKind::Unitary:
        h.blocks[i] = g.blocks[i].adjoint();
        break;
      case FactorKind::Torus:
        h.blocks[i] = g.blocks[i].conjugate();
        break;
      case FactorKind::Vector:
        h.blocks[i] = g.blocks[i].conjugate();
        break;
    }
  }
  return h;
}

Mat sqrt_pd(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  require(es.info() == Eigen::Success, "sqrt_pd: eigensolver failed");
  require(es.eigenvalues().minCoeff() > 0, "sqrt_pd: matrix not positive definite");
  return es.eigenvectors() *
         es.eigenvalues().cwiseSqrt().asDiagonal() *
         es.eigenvectors().adjoint();
}

Mat log_pd(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  require(es.info() == Eigen::Success, "log_pd: eigensolver failed");
  require(es.eigenvalues().minCoeff() > 0, "log_pd: matrix not positive definite");
  return es.eigenvectors() *
         es.eigenvalues().array().log().matrix().asDiagonal() *
         es.eigenvectors().adjoint();
}

Mat exp_hermitian(const Mat& h) {
  Eigen::SelfAdjointEigenSolver<Mat> es(h);
  require(es.info() == Eigen::Success, "exp_hermitian: eigensolver failed");
  return es.eigenvectors() *
         es.eigenvalues().array().exp().matrix().asDiagonal() *
         es.eigenvectors().adjoint();
}

GroupElement exp_of(const AlgebraElement& u) {
  GroupElement g = identity_element(u.group, u.complexified);
  for (int f = 0; f < u.group.factor_count(); ++f) {
    const size_t i = static_cast<size_t>(f);
    const Mat& b = u.blocks[i];
    switch (u.group.factor(f).kind) {
      case FactorKind::Unitary: {
        if (!u.complexified) {
          // skew-Hermitian: u = iH, H Hermitian
          Eigen::SelfAdjointEigenSolver<Mat> es(Mat(-kI * b));
          VecC ev = (kI * es.eigenvalues()).array().exp();
          g.blocks[i] = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
        } else {
          g.blocks[i] = b.exp();
        }
        break;
      }
      case FactorKind::Torus:
        g.blocks[i] = b.array().exp();
        break;
      case FactorKind::Vector:
        g.blocks[i] = b;  // exp is the identity shift
        break;
    }
  }
  return g;
}

GroupElement exp_sqrtminus1(const AlgebraElement& xi, double t) {
  require(!xi.complexified, "exp_sqrtminus1 expects a real algebra element");
  GroupElement g = identity_element(xi.group, true);
  for (int f = 0; f < xi.group.factor_count(); ++f) {
    const size_t i = static_cast<size_t>(f);
    const Mat& b = xi.blocks[i];
    switch (xi.group.factor(f).kind) {
      case FactorKind::Unitary:
        g.blocks[i] = exp_hermitian(Mat(t * kI * b));  // i*skew-Hermitian is Hermitian
        break;
      case FactorKind::Torus:
        g.blocks[i] = (t * kI * b.array()).exp();  // positive real entries
        break;
      case FactorKind::Vector:
        g.blocks[i] = t * kI * b;
        break;
    }
  }
  return g;
}

// --- polar decomposition ---------------------------------------------------------

PolarDecomposition polar_decompose(const GroupElement& g) {
  PolarDecomposition pd;
  pd.compact = identity_element(g.group, false);
  pd.xi = zero_algebra(g.group, false);
  for (int f = 0; f < g.group.factor_count(); ++f) {
    const size_t i = static_cast<size_t>(f);
    const Mat& b = g.blocks[i];
    switch (g.group.factor(f).kind) {
      case FactorKind::Unitary: {
        require(b.fullPivLu().isInvertible(), "polar_decompose: singular input");
        Mat h = b.adjoint() * b;                      // positive definite
        Mat half_log = 0.5 * log_pd(h);               // = sqrt(-1) xi
        pd.xi.blocks[i] = -kI * half_log;             // skew-Hermitian
        Mat p_inv = exp_hermitian(Mat(-half_log));
        Mat l = b * p_inv;
        // re-unitarize against rounding
        Mat ll = l.adjoint() * l;
        pd.compact.blocks[i] = l * exp_hermitian(Mat(-0.5 * log_pd(ll)));
        break;
      }
      case FactorKind::Torus: {
        Mat l(b.rows(), 1), xi(b.rows(), 1);
        for (int r = 0; r < b.rows(); ++r) {
          const cxd z = b(r, 0);
          require(std::abs(z) > 0, "polar_decompose: zero torus entry");
          l(r, 0) = z / std::abs(z);
          xi(r, 0) = -kI * std::log(std::abs(z));
        }
        pd.compact.blocks[i] = l;
        pd.xi.blocks[i] = xi;
        break;
      }
      case FactorKind::Vector:
        pd.compact.blocks[i] = b.real().cast<cxd>();
        pd.xi.blocks[i] = b.imag().cast<cxd>();
        break;
    }
  }
  return pd;
}

GroupElement geodesic_point(const GroupElement& base, const AlgebraElement& xi,
                            double t) {
  return mul(exp_sqrtminus1(xi, t), base);
}

GroupElement sym_rep(const GroupElement& g) {
  return mul(adjoint_element(g), g);
}

double sym_space_dist(const GroupElement& g1, const GroupElement& g2) {
  require(g1.group == g2.group, "sym_space_dist: group mismatch");
  double s = 0;
  for (int f = 0; f < g1.group.factor_count(); ++f) {
    const size_t i = static_cast<size_t>(f);
    const auto& fa = g1.group.factor(f);
    switch (fa.kind) {
      case FactorKind::Unitary: {
        Mat h1 = g1.blocks[i].adjoint() * g1.blocks[i];
        Mat h2 = g2.blocks[i].adjoint() * g2.blocks[i];
        Mat r = sqrt_pd(h1).inverse();
        Mat d = log_pd(Mat(r * h2 * r));
        s += 0.25 * fa.scale * d.squaredNorm();
        break;
      }
      case FactorKind::Torus: {
        for (int r = 0; r < fa.n; ++r) {
          const double d =
              std::log(std::abs(g2.blocks[i](r, 0))) - std::log(std::abs(g1.blocks[i](r, 0)));
          s += fa.scale * d * d;
        }
        break;
      }
      case FactorKind::Vector: {
        VecR d = (g2.blocks[i] - g1.blocks[i]).imag();
        s += fa.scale * d.squaredNorm();
        break;
      }
    }
  }
  return std::sqrt(s);
}

// --- moment values ----------------------------------------------------------------

MomentValue zero_moment(int dim, std::string tag) {
  MomentValue m;
  m.re = VecR::Zero(dim);
  m.c = VecC::Zero(dim);
  m.tag = std::move(tag);
  return m;
}

MomentValue add(const MomentValue& a, const MomentValue& b) {
  require(a.re.size() == b.re.size(), "moment add: dimension mismatch");
  MomentValue m = a;
  m.re += b.re;
  m.c += b.c;
  return m;
}

MomentValue scale(const MomentValue& m, double s) {
  MomentValue r = m;
  r.re *= s;
  r.c *= s;
  return r;
}

double pair_re(const MomentValue& m, const VecR& xi_coords) {
  require(m.re.size() == xi_coords.size(), "pair_re: dimension mismatch");
  return m.re.dot(xi_coords);
}

cxd pair_c(const MomentValue& m, const VecC& xi_coords) {
  require(m.c.size() == xi_coords.size(), "pair_c: dimension mismatch");
  return m.c.transpose() * xi_coords;  // bilinear, no conjugation
}

MomentValue coadjoint(const GroupElement& g, const MomentValue& m) {
  const GroupSpec& spec = g.group;
  require(m.re.size() == spec.dim(), "coadjoint: dimension mismatch");
  const int d = spec.dim();
  // K(a,b) = <b_a, Ad_g b_b>; real pairing needs compact g, the complex part
  // uses the bilinear pairing and admits complexified g.
  MatR Kre(d, d);
  Mat Kc(d, d);
  std::vector<AlgebraElement> ad_basis;
  ad_basis.reserve(static_cast<size_t>(d));
  for (int b = 0; b < d; ++b) ad_basis.push_back(Ad(g, basis_element(spec, b)));
  for (int a = 0; a < d; ++a) {
    AlgebraElement ba = basis_element(spec, a);
    for (int b = 0; b < d; ++b) {
      if (!g.complexified) {
        AlgebraElement adb = ad_basis[static_cast<size_t>(b)];
        adb.complexified = false;
        Kre(a, b) = inner(ba, adb);
      }
      Kc(a, b) = inner_c(ba, ad_basis[static_cast<size_t>(b)]);
    }
  }
  MomentValue out = m;
  out.re = g.complexified ? m.re : VecR(Kre.transpose() * m.re);
  out.c = Kc.transpose() * m.c;
  return out;
}

MatR center_basis(const GroupSpec& g, double tol) {
  return center_basis(SubAlgebra::full(g), tol);
}

// --- subalgebras ------------------------------------------------------------------

SubAlgebra SubAlgebra::full(const GroupSpec& g) {
  return SubAlgebra{g, MatR::Identity(g.dim(), g.dim())};
}

AlgebraElement embed(const SubAlgebra& s, const VecR& sub_coords) {
  return from_coords(s.ambient, VecR(s.basis * sub_coords));
}

AlgebraElement embed_c(const SubAlgebra& s, const VecC& sub_coords) {
  return from_coords_c(s.ambient, VecC(s.basis.cast<cxd>() * sub_coords));
}

VecR project(const SubAlgebra& s, const AlgebraElement& u) {
  return s.basis.transpose() * coords(u);
}

MatR center_basis(const SubAlgebra& s, double tol) {
  // Z = { m : <m, [u,v]> = 0 for all u,v in the subalgebra }, coordinates in
  // the subalgebra basis.
  const int d = s.dim();
  std::vector<AlgebraElement> bs;
  bs.reserve(static_cast<size_t>(d));
  for (int a = 0; a < d; ++a) bs.push_back(embed(s, VecR::Unit(d, a)));
  MatR rows(d * d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      AlgebraElement br = bracket(bs[static_cast<size_t>(a)], bs[static_cast<size_t>(b)]);
      rows.row(a * d + b) = (s.basis.transpose() * coords(br)).transpose();
    }
  return kernel_basis(rows, tol);
}

}  // namespace hkq
