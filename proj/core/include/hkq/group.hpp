#pragma once

#include <string>
#include <vector>

#include "hkq/common.hpp"

namespace hkq {

// Matrix Lie group substrate: finite products of unitary groups U(n), tori
// T^n = U(1)^n and additive vector groups R^n, together with their
// complexifications GL(n,C), (C*)^n and C^n.
//
// Algebra elements of a unitary factor are skew-Hermitian n x n matrices,
// torus algebra elements are vectors with purely imaginary entries, vector
// algebra elements are real vectors. The Ad-invariant inner product is
// <u,v> = scale * Re tr(u v*) on matrix factors and scale * u.v on vector
// factors; its C-bilinear extension is -scale * tr(uv) (resp. +scale * u.v).

enum class FactorKind { Unitary, Torus, Vector };

struct Factor {
  FactorKind kind = FactorKind::Unitary;
  int n = 1;
  double scale = 1.0;  // inner-product scale, default 1

  int dim() const { return kind == FactorKind::Unitary ? n * n : n; }
  bool abelian() const { return kind != FactorKind::Unitary || n == 1; }
  bool operator==(const Factor& o) const {
    return kind == o.kind && n == o.n && scale == o.scale;
  }
};

class GroupSpec {
 public:
  GroupSpec() = default;
  explicit GroupSpec(std::vector<Factor> f) : factors_(std::move(f)) {}

  static GroupSpec unitary(int k, double scale = 1.0);
  static GroupSpec torus(int k, double scale = 1.0);
  static GroupSpec vector_group(int k, double scale = 1.0);

  GroupSpec times(const GroupSpec& other) const;

  int factor_count() const { return static_cast<int>(factors_.size()); }
  const Factor& factor(int i) const { return factors_[static_cast<size_t>(i)]; }

  // Lie-algebra dimension and the coordinate offset of a factor's basis range.
  int dim() const;
  int dim_offset(int f) const;
  bool abelian() const;

  bool operator==(const GroupSpec& o) const { return factors_ == o.factors_; }

 private:
  std::vector<Factor> factors_;
};

struct AlgebraElement {
  GroupSpec group;
  std::vector<Mat> blocks;  // unitary: n x n, torus/vector: n x 1
  bool complexified = false;
};

struct GroupElement {
  GroupSpec group;
  std::vector<Mat> blocks;  // unitary: n x n, torus: n x 1 in C*, vector: n x 1
  bool complexified = false;  // compact-flagged iff false
};

// --- construction -----------------------------------------------------------

AlgebraElement zero_algebra(const GroupSpec& g, bool complexified = false);
GroupElement identity_element(const GroupSpec& g, bool complexified = false);

// Ordered orthonormal basis of the Lie algebra; index runs over [0, dim).
AlgebraElement basis_element(const GroupSpec& g, int index);

// Coordinates in the orthonormal basis. Real pairing for real elements,
// C-bilinear pairing for complexified ones (also valid for real input).
VecR coords(const AlgebraElement& u);
VecC coords_c(const AlgebraElement& u);
AlgebraElement from_coords(const GroupSpec& g, const VecR& c);
AlgebraElement from_coords_c(const GroupSpec& g, const VecC& c);

// --- algebra operations ------------------------------------------------------

double inner(const AlgebraElement& u, const AlgebraElement& v);
cxd inner_c(const AlgebraElement& u, const AlgebraElement& v);
double norm(const AlgebraElement& u);
// Hermitian norm^2 of a complexified element a + ib: |a|^2 + |b|^2.
double hnorm2(const AlgebraElement& u);

AlgebraElement add(const AlgebraElement& u, const AlgebraElement& v);
AlgebraElement scale(const AlgebraElement& u, cxd s);
AlgebraElement bracket(const AlgebraElement& u, const AlgebraElement& v);
AlgebraElement Ad(const GroupElement& g, const AlgebraElement& u);
AlgebraElement complexify(const AlgebraElement& u);

// --- group operations --------------------------------------------------------

GroupElement mul(const GroupElement& a, const GroupElement& b);
GroupElement inverse(const GroupElement& g);
GroupElement adjoint_element(const GroupElement& g);  // g^* per factor

// exp: L -> L (or L^C -> L^C for complexified input).
GroupElement exp_of(const AlgebraElement& u);
// e^{sqrt(-1) t xi} for real xi; lands in L^C with positive-definite
// unitary-factor blocks.
GroupElement exp_sqrtminus1(const AlgebraElement& xi, double t = 1.0);

// --- polar decomposition and the symmetric space L\L^C -----------------------

struct PolarDecomposition {
  GroupElement compact;  // l in L
  AlgebraElement xi;     // in l, so that g = l exp(sqrt(-1) xi)
};
PolarDecomposition polar_decompose(const GroupElement& g);

// Geodesic point e^{sqrt(-1) t xi} . base in L^C (coset representative).
GroupElement geodesic_point(const GroupElement& base, const AlgebraElement& xi,
                            double t);

// Distance on L\L^C induced by the algebra inner product; the geodesic
// {L e^{sqrt(-1) t xi}} has speed |xi|.
double sym_space_dist(const GroupElement& g1, const GroupElement& g2);

// Symmetric-space representative g*g (positive blocks for matrix factors).
GroupElement sym_rep(const GroupElement& g);

// --- positive-definite helpers (unitary factors) ------------------------------

Mat sqrt_pd(const Mat& h);
Mat log_pd(const Mat& h);
Mat exp_hermitian(const Mat& h);

// --- moment values ------------------------------------------------------------

// Element of Im H tensor l^*, stored as coordinates in the orthonormal basis
// under the inner-product identification l^* = l. real part is mu_1; complex
// part is mu_2 + sqrt(-1) mu_3 paired with the C-bilinear form.
struct MomentValue {
  VecR re;
  VecC c;
  std::string tag;  // group tag, informational
};

MomentValue zero_moment(int dim, std::string tag = {});
MomentValue add(const MomentValue& a, const MomentValue& b);
MomentValue scale(const MomentValue& m, double s);
double pair_re(const MomentValue& m, const VecR& xi_coords);
cxd pair_c(const MomentValue& m, const VecC& xi_coords);

// Coadjoint action <Ad*_g y, xi> := <y, Ad_g xi> on both parts (the complex
// part uses the complexified Ad when g is complexified).
MomentValue coadjoint(const GroupElement& g, const MomentValue& m);

// Orthonormal basis (columns, algebra coordinates) of the subspace Z of
// coadjoint-fixed dual elements, computed from ad via SVD.
MatR center_basis(const GroupSpec& g, double tol = 1e-10);

// --- subalgebras ---------------------------------------------------------------

// A subalgebra of an ambient group's Lie algebra, given by an orthonormal
// coordinate basis. Used for H_rho inside H and for torus subgroups.
struct SubAlgebra {
  GroupSpec ambient;
  MatR basis;  // ambient_dim x sub_dim, orthonormal columns

  int dim() const { return static_cast<int>(basis.cols()); }
  static SubAlgebra full(const GroupSpec& g);
};

AlgebraElement embed(const SubAlgebra& s, const VecR& sub_coords);
AlgebraElement embed_c(const SubAlgebra& s, const VecC& sub_coords);
VecR project(const SubAlgebra& s, const AlgebraElement& u);

// Z_L for a subalgebra that is closed under the bracket.
MatR center_basis(const SubAlgebra& s, double tol = 1e-10);

}  // namespace hkq
