#pragma once

// Hermitian dilation of a time-independent non-Hermitian H onto a qutrit
// plus a qubit ancilla:
//   H_tot(t) = Xi(t) (x) |1><1| + Lambda(t) (x) |0><0|
// with metric M(t) = exp(-i H^+ t) M0 exp(i H t) and eta = (M - I)^(1/2).
// In the ancilla state |-> = (|0> + |1>)/sqrt2 the register follows the
// non-Hermitian dynamics up to normalization.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "nhbraid/linalg.hpp"
#include "nhbraid/types.hpp"

namespace nhbraid {

inline Mat3 metric_M(const Mat3& h, double t, const Mat3& m0) {
  const Mat3 right = (cplx(0.0, t) * h).exp();
  return right.adjoint() * m0 * right;
}

/// Smallest shift gamma >= 0 such that H - i gamma I has a non-positive
/// anti-Hermitian part. The shift only rescales non-Hermitian states.
inline double dissipative_shift(const Mat3& h) {
  const Mat3 anti = (h - h.adjoint()) / cplx(0.0, 2.0);
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (anti + anti.adjoint()));
  return std::max(0.0, es.eigenvalues().maxCoeff());
}

/// Everything the dilation needs at one instant.
struct DilationFrame {
  double t = 0.0;
  Mat3 M, eta, eta_dot, Xi, Lambda;
  double margin = 0.0;  // min eigenvalue of M - I
};

struct DilationOptions {
  Mat3 M0 = 1.3 * Mat3::Identity();
  double scale = 1.0;   // dilation of scale * H
  double gamma = 0.0;   // H -> H - i gamma I before dilating
  int steps = 100;
};

struct DilationBundle {
  Mat3 generator;  // scale * H - i gamma I, the matrix actually dilated
  DilationOptions options;
  std::vector<double> time_grid;
  std::vector<Mat3> Xi, Lambda, eta, M;

  double min_margin = 0.0;
};

inline constexpr double kMetricFloor = 1e-8;

/// Solves eta X + X eta = rhs for Hermitian positive-definite eta.
inline Mat3 solve_sylvester_sym(const Mat3& eta, const Mat3& rhs) {
  Eigen::SelfAdjointEigenSolver<Mat3> es(0.5 * (eta + eta.adjoint()));
  const auto& v = es.eigenvectors();
  const auto& lam = es.eigenvalues();
  Mat3 x = v.adjoint() * rhs * v;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) /= (lam(i) + lam(j));
  return v * x * v.adjoint();
}

/// Dilation data at time t for the (already scaled and shifted) generator g.
inline DilationFrame dilation_frame(const Mat3& g, double t, const Mat3& m0) {
  DilationFrame f;
  f.t = t;
  f.M = metric_M(g, t, m0);
  f.M = 0.5 * (f.M + f.M.adjoint());
  const Mat3 excess = f.M - Mat3::Identity();
  Eigen::SelfAdjointEigenSolver<Mat3> es(excess);
  f.margin = es.eigenvalues().minCoeff();
  if (!(f.margin >= kMetricFloor))
    throw Error(ErrorKind::MetricDegenerate,
                "M - I loses positivity at t=" + std::to_string(t) + " (min eigenvalue " +
                    std::to_string(f.margin) + ")");
  f.eta = hermitian_sqrt(excess);
  const Mat3 m_dot = kI * (f.M * g - g.adjoint() * f.M);
  f.eta_dot = solve_sylvester_sym(f.eta, m_dot);
  // Closed-form inverse; inverting the badly conditioned M directly costs
  // digits of Hermiticity once M has grown.
  const Mat3 w_inv = (cplx(0.0, -t) * g).exp();
  Mat3 m_inv = w_inv * m0.inverse() * w_inv.adjoint();
  m_inv = 0.5 * (m_inv + m_inv.adjoint());
  const Mat3 lam_hat = (g + (kI * f.eta_dot + f.eta * g) * f.eta) * m_inv;
  const Mat3 xi_hat = kI * (g * f.eta - f.eta * g - kI * f.eta_dot) * m_inv;
  f.Xi = lam_hat + xi_hat;
  f.Lambda = lam_hat - xi_hat;
  return f;
}

inline DilationBundle build_dilation(const Mat3& h, double T, const DilationOptions& opt = {}) {
  if (!h.allFinite()) throw Error(ErrorKind::InvalidArgument, "H must be finite");
  if (!(T > 0.0) || !std::isfinite(T)) throw Error(ErrorKind::InvalidArgument, "T must be positive");
  if (opt.steps < 1) throw Error(ErrorKind::InvalidArgument, "steps must be positive");
  if (opt.scale == 0.0 || !std::isfinite(opt.scale)) throw Error(ErrorKind::InvalidArgument, "scale must be nonzero");
  if (!(opt.gamma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "gamma must be non-negative");
  if ((opt.M0 - opt.M0.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
    throw Error(ErrorKind::InvalidArgument, "M0 must be Hermitian");

  DilationBundle b;
  b.options = opt;
  b.generator = opt.scale * h - kI * opt.gamma * Mat3::Identity();
  b.min_margin = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= opt.steps; ++j) {
    const double t = T * j / opt.steps;
    const DilationFrame f = dilation_frame(b.generator, t, opt.M0);
    b.time_grid.push_back(t);
    b.Xi.push_back(f.Xi);
    b.Lambda.push_back(f.Lambda);
    b.eta.push_back(f.eta);
    b.M.push_back(f.M);
    b.min_margin = std::min(b.min_margin, f.margin);
  }
  return b;
}

struct EmbeddingReport {
  double residual = 0.0;     // max over t of 1 - |<proj, psi>| / (|proj| |psi|)
  double max_angle = 0.0;    // same comparison as an angle
  int rk4_steps = 0;
};

/// Evolves psi0 (x) (|-> + eta(0)|+>) under H_tot with fixed-step RK4,
/// doubling the step count until the final state stops changing, and compares
/// the |-> component with exp(-i G t) psi0 on the bundle grid.
inline EmbeddingReport verify_embedding(const DilationBundle& b, const Vec3& psi0) {
  if (!(psi0.norm() > 0.0)) throw Error(ErrorKind::InvalidArgument, "psi0 must be nonzero");
  const double T = b.time_grid.back();
  const Mat3& g = b.generator;
  const Mat3& m0 = b.options.M0;
  const std::size_t grid_n = b.time_grid.size() - 1;

  // u0 lives on ancilla |0> (evolves under Lambda), u1 on |1> (under Xi).
  const Vec3 eta_psi = b.eta.front() * psi0;
  const Vec3 u0_init = (psi0 + kI * eta_psi) / std::sqrt(2.0);
  const Vec3 u1_init = (psi0 - kI * eta_psi) / std::sqrt(2.0);

  auto run = [&](int per_interval, std::vector<Vec3>& projections) {
    Vec3 u0 = u0_init, u1 = u1_init;
    projections.assign(1, (u0 + u1) / std::sqrt(2.0));
    const double dt = T / (static_cast<double>(grid_n) * per_interval);
    auto rhs = [&](double t, const Vec3& a, const Vec3& c, Vec3& da, Vec3& dc) {
      const DilationFrame f = dilation_frame(g, t, m0);
      da = -kI * (f.Lambda * a);
      dc = -kI * (f.Xi * c);
    };
    for (std::size_t k = 0; k < grid_n; ++k) {
      for (int s = 0; s < per_interval; ++s) {
        const double t = b.time_grid[k] + s * dt;
        Vec3 a1, c1, a2, c2, a3, c3, a4, c4;
        rhs(t, u0, u1, a1, c1);
        rhs(t + 0.5 * dt, u0 + 0.5 * dt * a1, u1 + 0.5 * dt * c1, a2, c2);
        rhs(t + 0.5 * dt, u0 + 0.5 * dt * a2, u1 + 0.5 * dt * c2, a3, c3);
        rhs(t + dt, u0 + dt * a3, u1 + dt * c3, a4, c4);
        u0 += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        u1 += dt / 6.0 * (c1 + 2.0 * c2 + 2.0 * c3 + c4);
      }
      projections.push_back((u0 + u1) / std::sqrt(2.0));
    }
  };

  int per = 2;
  std::vector<Vec3> proj, next;
  run(per, proj);
  for (int round = 0; round < 8; ++round) {
    run(2 * per, next);
    per *= 2;
    double change = 0.0;
    for (std::size_t k = 0; k < proj.size(); ++k)
      change = std::max(change, (next[k] - proj[k]).norm() / std::max(1.0, next[k].norm()));
    proj.swap(next);
    if (change < 1e-11) break;
  }

  EmbeddingReport rep;
  rep.rk4_steps = per * static_cast<int>(grid_n);
  for (std::size_t k = 0; k <= grid_n; ++k) {
    Vec3 exact = (-kI * b.time_grid[k] * g).exp() * psi0;
    exact.normalize();
    const Vec3 p = proj[k] / proj[k].norm();
    const cplx ov = exact.dot(p);
    const double sin_angle = (p - ov * exact).norm();
    rep.residual = std::max(rep.residual, 1.0 - std::min(1.0, std::abs(ov)));
    rep.max_angle = std::max(rep.max_angle, std::asin(std::min(1.0, sin_angle)));
  }
  return rep;
}

/// Full 6x6 dilated Hamiltonian, ancilla as the second tensor factor with
/// basis order (|0>, |1>).
inline Eigen::Matrix<cplx, 6, 6> total_hamiltonian(const Mat3& xi, const Mat3& lambda) {
  Eigen::Matrix<cplx, 6, 6> h = Eigen::Matrix<cplx, 6, 6>::Zero();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      h(2 * i, 2 * j) = lambda(i, j);
      h(2 * i + 1, 2 * j + 1) = xi(i, j);
    }
  return h;
}

}  // namespace nhbraid
