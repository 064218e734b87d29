#pragma once

// Eigenvalue reconstruction from population ratios, and a prior-free fit of a
// generic traceless 3x3 generator to normalized population data.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "nhbraid/model.hpp"
#include "nhbraid/spectral.hpp"

namespace nhbraid {

using EigenTriple = std::array<cplx, 3>;

/// Measured ratios for the two eigenstates which[0], which[1] (indices into
/// the eigensolve ordering). a = P2/P1 after U_a, b = P2/P1 after U_b.
struct PopulationRatios {
  std::array<int, 2> which{0, 1};
  std::array<double, 2> a{};
  std::array<double, 2> b{};

  void validate() const {
    if (which[0] == which[1] || which[0] < 0 || which[1] < 0 || which[0] > 2 || which[1] > 2)
      throw Error(ErrorKind::InvalidArgument, "which must name two distinct eigenstates");
    for (double v : {a[0], a[1], b[0], b[1]})
      if (!(v >= 0.0) || !std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "ratios must be finite and non-negative");
  }
};

namespace detail {

inline double ratio_a(cplx x) { return 0.5 * std::norm(x); }

inline double ratio_b(cplx x) {
  const double r = 1.0 / std::sqrt(2.0);
  const cplx num = kI + r * x;
  const cplx den = 1.0 + kI * r * x;
  return std::norm(num) / std::norm(den);
}

}  // namespace detail

/// Ratios for the measured pair of an eigenvalue triple, using c2 = -sum(E).
inline PopulationRatios ratios_from_eigenvalues(const EigenTriple& e, std::array<int, 2> which) {
  PopulationRatios out;
  out.which = which;
  const cplx c2 = -(e[0] + e[1] + e[2]);
  for (int m = 0; m < 2; ++m) {
    const cplx x = c2 + e[which[m]];
    if (std::abs(1.0 + kI * x / std::sqrt(2.0)) < 1e-12)
      throw Error(ErrorKind::InvalidArgument, "U_b ratio denominator vanishes");
    out.a[m] = detail::ratio_a(x);
    out.b[m] = detail::ratio_b(x);
  }
  return out;
}

/// The two eigenstates with the largest |c2 + E|.
inline std::array<int, 2> default_measured_pair(const ModelParams& p) {
  const auto s = eigensolve(p);
  const cplx c2 = poly_coeffs(p).c2;
  std::array<int, 3> idx{0, 1, 2};
  std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) {
    return std::abs(c2 + s.eigenvalues[i]) > std::abs(c2 + s.eigenvalues[j]);
  });
  std::array<int, 2> w{idx[0], idx[1]};
  std::sort(w.begin(), w.end());
  return w;
}

inline PopulationRatios forward_ratios(const ModelParams& p, std::optional<std::array<int, 2>> which = std::nullopt) {
  const auto s = eigensolve(p);
  const std::array<int, 2> w = which ? *which : default_measured_pair(p);
  PopulationRatios probe;
  probe.which = w;
  probe.validate();
  return ratios_from_eigenvalues({s.eigenvalues[0], s.eigenvalues[1], s.eigenvalues[2]}, w);
}

/// Multiplicative Gaussian noise, clipped at zero.
inline PopulationRatios add_ratio_noise(PopulationRatios r, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (auto* v : {&r.a[0], &r.a[1], &r.b[0], &r.b[1]}) *v = std::max(0.0, *v * (1.0 + sigma * n(rng)));
  return r;
}

/// E1 E2 E3 - (sum E)(sum_{i<j} Ei Ej + 2); zero for every family member.
inline cplx constraint_residual(const EigenTriple& e) {
  const cplx s = e[0] + e[1] + e[2];
  const cplx q = e[0] * e[1] + e[1] * e[2] + e[0] * e[2];
  return e[0] * e[1] * e[2] - s * (q + 2.0);
}

struct SolveOptions {
  std::optional<double> alpha;  // model prior: Re c2 = 1 - (alpha - 2)^2
  int seeds = 64;
  std::uint64_t seed = 1;
  double tie_tol = 1e-8;
};

enum class SolveStatus { Unique, Ambiguous };

inline const char* to_string(SolveStatus s) { return s == SolveStatus::Unique ? "unique" : "ambiguous"; }

struct EigenSolution {
  EigenTriple eigenvalues;  // indexed like the eigensolve ordering implied by ratios.which
  double residual = 0.0;
};

struct Reconstruction {
  SolveStatus status = SolveStatus::Unique;
  EigenSolution best;
  std::vector<EigenSolution> candidates;  // distinct minima within tie_tol of best
  int converged_seeds = 0;
};

namespace detail {

struct RatioSystem {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  PopulationRatios ratios;
  std::optional<double> alpha;

  int inputs() const { return 6; }
  int values() const { return alpha ? 7 : 6; }

  static EigenTriple unpack(const Eigen::VectorXd& x) {
    return {cplx(x(0), x(1)), cplx(x(2), x(3)), cplx(x(4), x(5))};
  }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    const EigenTriple e = unpack(x);
    const cplx c2 = -(e[0] + e[1] + e[2]);
    for (int m = 0; m < 2; ++m) {
      const cplx xm = c2 + e[ratios.which[m]];
      f(2 * m) = (ratio_a(xm) - ratios.a[m]) / (1.0 + ratios.a[m]);
      f(2 * m + 1) = (ratio_b(xm) - ratios.b[m]) / (1.0 + ratios.b[m]);
    }
    const cplx c = constraint_residual(e);
    f(4) = c.real();
    f(5) = c.imag();
    if (alpha) f(6) = c2.real() - (1.0 - (*alpha - 2.0) * (*alpha - 2.0));
    return 0;
  }
};

template <typename Functor>
Eigen::VectorXd run_lm(const Functor& fn, Eigen::VectorXd x, double& residual) {
  Eigen::NumericalDiff<Functor, Eigen::Central> diff(fn);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Functor, Eigen::Central>> lm(diff);
  lm.parameters.maxfev = 4000;
  lm.parameters.xtol = 1e-15;
  lm.parameters.ftol = 1e-15;
  lm.minimize(x);
  Eigen::VectorXd f(fn.values());
  fn(x, f);
  residual = f.norm();
  return x;
}

inline double triple_distance(const EigenTriple& a, const EigenTriple& b) {
  double d = 0.0;
  for (int i = 0; i < 3; ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace detail

/// Least-squares inversion of the ratio system with random complex seeds. The
/// seed scale is bounded by |c2 + E| <= sqrt(2 a) for the measured pair.
inline Reconstruction solve_eigenvalues(const PopulationRatios& ratios, const SolveOptions& opt = {}) {
  ratios.validate();
  if (opt.seeds < 1) throw Error(ErrorKind::InvalidArgument, "seeds must be positive");
  detail::RatioSystem sys{ratios, opt.alpha};
  const double scale = 1.0 + std::sqrt(2.0 * std::max(ratios.a[0], ratios.a[1]));
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> n(0.0, scale);

  std::vector<EigenSolution> found;
  Reconstruction out;
  for (int s = 0; s < opt.seeds; ++s) {
    Eigen::VectorXd x(6);
    for (int i = 0; i < 6; ++i) x(i) = n(rng);
    double res = 0.0;
    x = detail::run_lm(sys, x, res);
    if (!x.allFinite() || !std::isfinite(res)) continue;
    ++out.converged_seeds;
    found.push_back({detail::RatioSystem::unpack(x), res});
  }
  if (found.empty()) throw Error(ErrorKind::InvalidArgument, "no seed produced a finite solution");
  std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.residual < b.residual; });
  out.best = found.front();
  for (const auto& f : found) {
    if (f.residual > out.best.residual + opt.tie_tol) break;
    const bool dup = std::any_of(out.candidates.begin(), out.candidates.end(), [&](const auto& c) {
      return detail::triple_distance(c.eigenvalues, f.eigenvalues) < 1e-6;
    });
    if (!dup) out.candidates.push_back(f);
  }
  out.status = out.candidates.size() > 1 ? SolveStatus::Ambiguous : SolveStatus::Unique;
  const auto& e = out.best.eigenvalues;
  if (std::abs(e[0] + e[1] + e[2]) < 1e-8)
    throw Error(ErrorKind::Degenerate, "sum of eigenvalues vanishes; c1 is undefined");
  return out;
}

// ---------------------------------------------------------------------------
// Prior-free fit.

/// Traceless 3x3 complex matrix: a[0..3] are Re/Im of diagonal entries 0 and 1
/// (entry 2 is minus their sum); a[4..15] are Re/Im of the six off-diagonal
/// entries in row-major order.
struct GenericH {
  std::array<double, 16> a{};

  Mat3 matrix() const {
    Mat3 h = Mat3::Zero();
    h(0, 0) = cplx(a[0], a[1]);
    h(1, 1) = cplx(a[2], a[3]);
    h(2, 2) = -h(0, 0) - h(1, 1);
    int k = 4;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) {
          h(i, j) = cplx(a[k], a[k + 1]);
          k += 2;
        }
    return h;
  }

  static GenericH from_matrix(const Mat3& m) {
    const Mat3 h = m - (m.trace() / 3.0) * Mat3::Identity();
    GenericH g;
    g.a[0] = h(0, 0).real();
    g.a[1] = h(0, 0).imag();
    g.a[2] = h(1, 1).real();
    g.a[3] = h(1, 1).imag();
    int k = 4;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) {
          g.a[k] = h(i, j).real();
          g.a[k + 1] = h(i, j).imag();
          k += 2;
        }
    return g;
  }
};

/// One normalized population P_level / (P_1 + P_2 + P_3) with
/// P_i = |<basis_i| exp(-i H t) |initial>|^2 (basis vectors are columns).
struct Measurement {
  Vec3 initial;
  Mat3 basis;
  double time = 0.0;
  int level = 0;
  double value = 0.0;
};

inline double predict(const Mat3& h, const Measurement& m) {
  const Vec3 out = m.basis.adjoint() * ((-kI * m.time * h).exp() * m.initial);
  const double total = out.squaredNorm();
  if (!(total > 0.0)) throw Error(ErrorKind::InvalidArgument, "measurement has zero total population");
  return std::norm(out(m.level)) / total;
}

/// Eigenbasis of the spin-1 operator S_x, S_y or S_z, as columns.
inline Mat3 spin1_basis(char axis) {
  Mat3 s = Mat3::Zero();
  const double r = 1.0 / std::sqrt(2.0);
  switch (axis) {
    case 'x': s << 0, r, 0, r, 0, r, 0, r, 0; break;
    case 'y': s << 0, -kI * r, 0, kI * r, 0, -kI * r, 0, kI * r, 0; break;
    case 'z': return Mat3::Identity();
    default: throw Error(ErrorKind::InvalidArgument, std::string("unknown spin axis ") + axis);
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(s);
  return es.eigenvectors();
}

struct GenericFitOptions {
  int seeds = 32;
  std::uint64_t seed = 1;
  double scale = 1.0;  // standard deviation of the seed parameters
  double rank_tol = 1e-7;
  double exact_tol = 1e-13;  // stop the multistart once the data are fit this well
};

struct GenericFit {
  GenericH h;
  double residual = 0.0;
  int rank = 0;
};

namespace detail {

struct GenericSystem {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  const std::vector<Measurement>* data;

  int inputs() const { return 16; }
  int values() const { return static_cast<int>(data->size()); }

  static GenericH unpack(const Eigen::VectorXd& x) {
    GenericH g;
    for (int i = 0; i < 16; ++i) g.a[i] = x(i);
    return g;
  }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    const Mat3 h = unpack(x).matrix();
    // Measurements usually come in groups sharing a time; reuse the propagator.
    double last_t = std::numeric_limits<double>::quiet_NaN();
    Mat3 u;
    for (std::size_t k = 0; k < data->size(); ++k) {
      const Measurement& m = (*data)[k];
      if (!(m.time == last_t)) {
        u = (-kI * m.time * h).exp();
        last_t = m.time;
      }
      const Vec3 out = m.basis.adjoint() * (u * m.initial);
      const double total = out.squaredNorm();
      f(k) = (total > 0.0 ? std::norm(out(m.level)) / total : 0.0) - m.value;
    }
    return 0;
  }
};

}  // namespace detail

/// Sum-of-squares residual norm of the data at a given generator.
inline double fit_residual(const GenericH& h, const std::vector<Measurement>& data) {
  const Mat3 m = h.matrix();
  double s = 0.0;
  for (const auto& d : data) s += std::pow(predict(m, d) - d.value, 2);
  return std::sqrt(s);
}

inline GenericFit generic_fit(const std::vector<Measurement>& data, const GenericFitOptions& opt = {}) {
  if (data.size() < 16) throw Error(ErrorKind::RankDeficient, "fewer than 16 measurements");
  for (const auto& d : data)
    if (d.level < 0 || d.level > 2 || !(d.time >= 0.0))
      throw Error(ErrorKind::InvalidArgument, "measurement level must be 0..2 and time non-negative");
  detail::GenericSystem sys{&data};
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> n(0.0, opt.scale);

  GenericFit best;
  best.residual = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  for (int s = 0; s < opt.seeds; ++s) {
    Eigen::VectorXd x(16);
    for (int i = 0; i < 16; ++i) x(i) = n(rng);
    double res = 0.0;
    x = detail::run_lm(sys, x, res);
    if (x.allFinite() && res < best.residual) {
      best.residual = res;
      best_x = x;
    }
    if (best.residual < opt.exact_tol) break;  // already a global minimum
  }
  if (best_x.size() == 0) throw Error(ErrorKind::InvalidArgument, "no seed produced a finite fit");
  best.h = detail::GenericSystem::unpack(best_x);

  Eigen::NumericalDiff<detail::GenericSystem, Eigen::Central> diff(sys);
  Eigen::MatrixXd jac(sys.values(), 16);
  diff.df(best_x, jac);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(jac);
  const auto& sv = svd.singularValues();
  best.rank = 0;
  for (int i = 0; i < sv.size(); ++i)
    if (sv(i) > opt.rank_tol * sv(0)) ++best.rank;
  if (best.rank < 16)
    throw Error(ErrorKind::RankDeficient,
                "Jacobian rank " + std::to_string(best.rank) + " < 16; measurement set is insufficient");
  return best;
}

}  // namespace nhbraid
