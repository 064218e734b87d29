#pragma once

// Non-Hermitian dynamics i d/dt psi = H psi and spectral filtering: evolving
// under g(H) for long times leaves the eigenvector whose g-eigenvalue has the
// largest imaginary part.

#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "nhbraid/linalg.hpp"
#include "nhbraid/model.hpp"

namespace nhbraid {

/// states[j] is the unit direction at times[j]; the actual state is
/// exp(log_norms[j]) * states[j].
struct StateTrajectory {
  std::vector<double> times;
  std::vector<Vec3> states;
  std::vector<double> log_norms;

  Vec3 state(std::size_t j) const { return std::exp(log_norms[j]) * states[j]; }
};

inline StateTrajectory evolve_nh(const Mat3& h, const Vec3& psi0, double T, int steps) {
  if (!(psi0.norm() > 0.0)) throw Error(ErrorKind::InvalidArgument, "psi0 must be nonzero");
  if (!(T >= 0.0) || !std::isfinite(T)) throw Error(ErrorKind::InvalidArgument, "T must be non-negative");
  if (steps < 1) throw Error(ErrorKind::InvalidArgument, "steps must be positive");
  const double dt = T / steps;
  const Mat3 step = (-kI * dt * h).exp();
  StateTrajectory out;
  Vec3 psi = psi0;
  double log_norm = 0.0;
  for (int j = 0; j <= steps; ++j) {
    if (j > 0) psi = step * psi;
    const double n = psi.norm();
    log_norm += std::log(n);
    psi /= n;
    out.times.push_back(j * dt);
    out.states.push_back(psi);
    out.log_norms.push_back(log_norm);
  }
  return out;
}

enum class Filter { H, MinusH, IH, MinusIH, IResolvent, MinusIResolvent };

inline const char* to_string(Filter f) {
  switch (f) {
    case Filter::H: return "H";
    case Filter::MinusH: return "-H";
    case Filter::IH: return "iH";
    case Filter::MinusIH: return "-iH";
    case Filter::IResolvent: return "i(H-E)^-1";
    case Filter::MinusIResolvent: return "-i(H-E)^-1";
  }
  return "?";
}

struct SteadyStateOptions {
  double t_max = 5000.0;  // number of steps of length 1/norm(g(H))
  double tol = 1e-8;     // sine of the direction change per unit time step
  cplx shift{0.0, 0.0};  // resolvent shift
};

struct SteadyState {
  Vec3 vector;
  cplx eigenvalue;
  bool converged = false;
  double time = 0.0;
  double direction_change = 0.0;
};

namespace detail {

inline Mat3 filter_generator(const Mat3& h, Filter f, cplx shift) {
  switch (f) {
    case Filter::H: return h;
    case Filter::MinusH: return -h;
    case Filter::IH: return kI * h;
    case Filter::MinusIH: return -kI * h;
    case Filter::IResolvent:
    case Filter::MinusIResolvent: {
      const Mat3 a = h - shift * Mat3::Identity();
      Eigen::JacobiSVD<Mat3> svd(a);
      if (!(svd.singularValues()(2) > 1e-8))
        throw Error(ErrorKind::InvalidArgument, "resolvent shift is too close to an eigenvalue");
      const Mat3 r = a.partialPivLu().solve(Mat3::Identity());
      return (f == Filter::IResolvent ? kI : -kI) * r;
    }
  }
  return h;
}

}  // namespace detail

/// Evolves under g(H) with unit steps of 1/|g(H)| until the normalized state
/// turns by less than tol per step. The eigenvalue is the Rayleigh quotient
/// polished by one Newton step on the characteristic polynomial of H.
inline SteadyState steady_eigenstate(const Mat3& h, Filter f, const Vec3& psi0,
                                     const SteadyStateOptions& opt = {}) {
  if (!(psi0.norm() > 0.0)) throw Error(ErrorKind::InvalidArgument, "psi0 must be nonzero");
  if (!(opt.t_max > 0.0) || !(opt.tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "t_max and tol must be positive");
  const Mat3 g = detail::filter_generator(h, f, opt.shift);
  const double scale = std::max(g.norm(), 1e-300);
  const double dt = 1.0 / scale;
  const Mat3 step = (-kI * dt * g).exp();

  SteadyState out;
  Vec3 psi = psi0.normalized();
  const int max_steps = static_cast<int>(std::ceil(opt.t_max));
  for (int j = 1; j <= max_steps; ++j) {
    Vec3 next = step * psi;
    next.normalize();
    const cplx ov = psi.dot(next);
    out.direction_change = (next - ov * psi).norm();
    // Fix the global phase so consecutive iterates are comparable.
    if (std::abs(ov) > 0.0) next *= std::conj(ov) / std::abs(ov);
    psi = next;
    out.time = j * dt;
    if (out.direction_change < opt.tol) {
      out.converged = true;
      break;
    }
  }
  out.vector = psi;
  cplx e = psi.dot(h * psi);
  const Cubic p = characteristic_polynomial(h);
  const cplx dp = p.derivative(e);
  if (std::abs(dp) > 0.0) {
    const cplx polished = e - p(e) / dp;
    if (std::abs(p(polished)) < std::abs(p(e))) e = polished;
  }
  out.eigenvalue = e;
  return out;
}

/// Nearest unit-trace positive semidefinite matrix in Frobenius norm:
/// eigenvalues projected onto the probability simplex.
inline Mat3 psd_project(const Mat3& raw) {
  const Mat3 herm = 0.5 * (raw + raw.adjoint());
  Eigen::SelfAdjointEigenSolver<Mat3> es(herm);
  Eigen::Vector3d lam = es.eigenvalues();
  // Simplex projection: sort descending, find the threshold.
  std::array<double, 3> sorted{lam(0), lam(1), lam(2)};
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (int k = 0; k < 3; ++k) {
    cum += sorted[k];
    const double t = (cum - 1.0) / (k + 1);
    if (sorted[k] - t > 0.0) theta = t;
  }
  for (int i = 0; i < 3; ++i) lam(i) = std::max(lam(i) - theta, 0.0);
  return es.eigenvectors() * lam.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

inline bool is_density_matrix(const Mat3& rho, double tol = 1e-9) {
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10) return false;
  if (std::abs(rho.trace() - 1.0) > 1e-10) return false;
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (rho + rho.adjoint()));
  return es.eigenvalues().minCoeff() >= -tol;
}

}  // namespace nhbraid
