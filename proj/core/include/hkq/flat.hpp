#pragma once

#include <optional>
#include <vector>

#include "hkq/group.hpp"
#include "hkq/rng.hpp"

namespace hkq {

// Flat quaternionic spaces M = H^N with linear group actions.
//
// A point is a list of paired complex blocks (Z_m, W_m); entries Z_ij and
// W_ji form one quaternionic coordinate pair (z, w). The flat hyper-Kahler
// structure used throughout is
//   g(X,Y)   = 2 sum_m Re tr(X_Z Y_Z^*) + Re tr(X_W Y_W^*)
//   I_1(Z,W) = (iZ, iW)
//   I_2(Z,W) = (i W^*, -i Z^*)
//   I_3(Z,W) = (-W^*, Z^*)
//   omega_C  = omega_2 + i omega_3 = 2i (dz ^ dw)
// i.e. the holomorphic symplectic pairing is the dz^dw pattern with constant
// 2i. The normalization is pinned by the closed-form moment maps of the
// Hilbert-scheme preset together with d mu(xi) = omega(xi*, .).

struct PairBlock {
  int rows = 1;
  int cols = 1;
};

struct Point {
  std::vector<Mat> z;  // block m: rows x cols
  std::vector<Mat> w;  // block m: cols x rows
};

enum class PresetKind { Hilbert, Quiver, Toric, Modification };

struct QuiverInput {
  int num_vertices = 0;              // |V| of the base graph
  std::vector<int> vdim;             // v_k per base vertex
  std::vector<int> pi;               // pi : V~ -> V, size |V~|
  std::vector<std::pair<int, int>> edges;  // per edge h in Omega: (s~, t~) in V~
};

struct ActionSpec {
  PresetKind kind = PresetKind::Hilbert;
  GroupSpec H;
  GroupSpec G;
  std::vector<PairBlock> shape;

  // Bi-module actions (Hilbert, Quiver): per pair the H-factor acting on the
  // left/right of the Z block (-1 = none); W transforms oppositely.
  struct BiPair {
    int left = -1;
    int right = -1;
  };
  std::vector<BiPair> bipairs;

  // Diagonal actions (Toric, Modification): coordinate j of every pair scales
  // by exp(i (W c)_j) for algebra coordinates c.
  MatR wmat;

  // rho: h -> g + g in orthonormal algebra coordinates.
  MatR R0, R1;

  // H_rho = ker(R0 - R1) and the annihilator data.
  SubAlgebra hrho;

  int hilbert_k = 0;
  QuiverInput quiver;

  // Quiver group-level index maps: G factor f is H factor gidx0[f] (resp.
  // gidx1[f]) on the 0 (resp. 1) side.
  std::vector<int> gidx0, gidx1;

  // Toric/modification: lift of g-coordinates back into h-coordinates
  // (orthonormal columns; R_side * lift = Id).
  MatR glift;
};

// --- presets -------------------------------------------------------------------

ActionSpec hilbert_preset(int k);
ActionSpec quiver_preset(const QuiverInput& in);
// kZ: r x N integer matrix whose rows span k_Z inside Z^N; H = R^N.
ActionSpec toric_preset(const Eigen::MatrixXi& kZ);
// H = T^k acting on H^N with integer weights (N x k); the normal subgroup
// H_rho has Lie algebra spanned by the rows of `normal` (r x k).
ActionSpec modification_preset(const Eigen::MatrixXi& weights,
                               const Eigen::MatrixXi& normal);

// Expected H_rho dimension per preset, used as a build invariant.
int expected_hrho_dim(const ActionSpec& spec);

// --- points -------------------------------------------------------------------

Point zero_point(const ActionSpec& spec);
Point random_point(const ActionSpec& spec, Rng& rng, double sigma = 1.0);
Point add(const Point& a, const Point& b);
Point scale_point(const Point& a, cxd s);
double enorm2(const Point& x);  // plain Euclidean sum of |entries|^2

// --- flat hyper-Kahler structure ------------------------------------------------

double metric(const Point& x, const Point& y);
Point apply_complex_structure(int axis, const Point& x);  // axis in {1,2,3}
double symplectic_form(int axis, const Point& x, const Point& y);
cxd symplectic_c(const Point& x, const Point& y);

// Orthonormal frame {y, y', y''} rotating the triple of complex structures;
// rows are the frame vectors.
struct Frame {
  Eigen::Matrix3d rot = Eigen::Matrix3d::Identity();
};
Frame frame_from_axis(const Eigen::Vector3d& y);
double symplectic_form(const Frame& fr, int axis, const Point& x, const Point& y);
MomentValue rotate_moment(const Frame& fr, const MomentValue& m);

// --- group action ---------------------------------------------------------------

// h may be complexified; the action is I_1-holomorphic.
Point act(const ActionSpec& spec, const GroupElement& h, const Point& x);
// Infinitesimal action; xi may be complexified (C-linear extension).
Point inf_act(const ActionSpec& spec, const AlgebraElement& xi, const Point& x);

// rho at group level; h may be complexified.
std::pair<GroupElement, GroupElement> rho_group(const ActionSpec& spec,
                                                const GroupElement& h);

// --- moment maps ----------------------------------------------------------------

// mu_hat : M -> Im H (x) h^*, mu_xi(x) = 1/2 omega(xi*_x, x); mu(0) = 0.
MomentValue moment_hat(const ActionSpec& spec, const Point& x);
// iota^* mu_hat, coordinates in the H_rho basis.
MomentValue moment_restricted(const ActionSpec& spec, const Point& x);
MomentValue restrict_moment(const SubAlgebra& sub, const MomentValue& m);

// sigma = mu_hat + rho^* nu for a Nahm moment value nu over G x G.
MomentValue sigma_moment(const ActionSpec& spec, const Point& x,
                         const MomentValue& nu_gg);
// rho^* pullback alone.
MomentValue rho_pullback(const ActionSpec& spec, const MomentValue& nu_gg);

// --- invariant checks -------------------------------------------------------------

// max over basis pairs of |rho[u,v] - [rho u, rho v]|.
double rho_homomorphism_defect(const ActionSpec& spec);
// rank of the induced map h/h_rho -> (g+g)/Delta; surjective iff == dim g.
int rho_bar_rank(const ActionSpec& spec, double tol = 1e-10);

}  // namespace hkq
