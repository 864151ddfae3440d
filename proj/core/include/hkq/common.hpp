#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace hkq {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using MatR = Eigen::MatrixXd;
using VecC = Eigen::VectorXcd;
using VecR = Eigen::VectorXd;

constexpr cxd kI{0.0, 1.0};

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

// Orthonormal kernel basis (columns) of a real matrix, by SVD with a fixed
// singular-value threshold.
MatR kernel_basis(const MatR& m, double tol = 1e-10);
Eigen::MatrixXcd kernel_basis_c(const Mat& m, double tol = 1e-10);
int rank_of(const MatR& m, double tol = 1e-10);
int rank_of_c(const Mat& m, double tol = 1e-10);

// Orthonormal basis of the column span.
MatR span_basis(const MatR& m, double tol = 1e-10);

}  // namespace hkq
