#pragma once

// Small dense helpers shared by the EP classifier, the dilation and the
// dynamics code.

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "nhbraid/types.hpp"

namespace nhbraid {

/// Principal square root of a Hermitian positive semidefinite matrix. Small
/// negative eigenvalues from roundoff are clamped to zero.
template <typename Derived>
Eigen::Matrix<cplx, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime> hermitian_sqrt(
    const Eigen::MatrixBase<Derived>& a) {
  using M = Eigen::Matrix<cplx, Derived::RowsAtCompileTime, Derived::ColsAtCompileTime>;
  const M herm = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<M> es(herm);
  auto lam = es.eigenvalues().array().max(0.0).sqrt().matrix();
  return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().adjoint();
}

/// |v><v| / <v|v>.
inline Mat3 density_matrix(const Vec3& v) {
  const double n2 = v.squaredNorm();
  if (!(n2 > 0.0)) throw Error(ErrorKind::InvalidArgument, "zero state vector");
  return v * v.adjoint() / n2;
}

namespace detail {

// Square root that also zeroes eigenvalues at roundoff level, so pure states
// do not pick up sqrt(eps)-sized spurious components.
inline Mat3 psd_sqrt(const Mat3& a) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (a + a.adjoint()));
  Eigen::Vector3d lam = es.eigenvalues();
  const double floor = 1e-13 * std::max(lam.cwiseAbs().maxCoeff(), 1e-300);
  for (int i = 0; i < 3; ++i) lam(i) = lam(i) > floor ? std::sqrt(lam(i)) : 0.0;
  return es.eigenvectors() * lam.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace detail

/// Uhlmann fidelity [Tr sqrt(sqrt(rho) sigma sqrt(rho))]^2, evaluated as the
/// squared trace norm of sqrt(rho) sqrt(sigma).
inline double fidelity(const Mat3& rho, const Mat3& sigma) {
  const Mat3 prod = detail::psd_sqrt(rho) * detail::psd_sqrt(sigma);
  const double tr = Eigen::JacobiSVD<Mat3>(prod).singularValues().sum();
  return tr * tr;
}

}  // namespace nhbraid
