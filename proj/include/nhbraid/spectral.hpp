#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/SVD>

#include "nhbraid/model.hpp"

namespace nhbraid {

using Triple = std::array<cplx, 3>;

struct Spectrum {
  Triple eigenvalues;
  std::optional<std::array<Vec3, 3>> eigenvectors;  // unit-norm right eigenvectors
};

/// Roots of a monic cubic via Cardano, each polished by up to three Newton
/// steps. Repeated roots come back as repeated values.
inline Triple solve_cubic(const Cubic& poly) {
  const cplx b = poly.b;
  const cplx shift = b / 3.0;
  const cplx p = poly.c - b * b / 3.0;
  const cplx q = 2.0 * b * b * b / 27.0 - b * poly.c / 3.0 + poly.d;
  const cplx sq = std::sqrt(q * q / 4.0 + p * p * p / 27.0);
  const cplx w1 = -q / 2.0 + sq;
  const cplx w2 = -q / 2.0 - sq;
  const cplx w = std::abs(w1) >= std::abs(w2) ? w1 : w2;

  Triple roots;
  if (std::abs(w) == 0.0) {
    roots.fill(-shift);
  } else {
    const cplx u = std::pow(w, 1.0 / 3.0);
    const cplx omega(-0.5, std::sqrt(3.0) / 2.0);
    cplx rot = 1.0;
    for (auto& r : roots) {
      const cplx uk = u * rot;
      r = uk - p / (3.0 * uk) - shift;
      rot *= omega;
    }
  }

  for (auto& r : roots) {
    for (int it = 0; it < 3; ++it) {
      const cplx f = poly(r);
      const cplx df = poly.derivative(r);
      if (f == 0.0 || df == 0.0) break;
      const cplx next = r - f / df;
      if (!(std::abs(poly(next)) < std::abs(f))) break;
      r = next;
    }
  }
  return roots;
}

namespace detail {

inline bool less_re_im(cplx a, cplx b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

/// Right singular vector of the smallest singular value.
inline Vec3 null_vector(const Mat3& a) {
  Eigen::JacobiSVD<Mat3> svd(a, Eigen::ComputeFullV);
  return svd.matrixV().col(2);
}

inline double eigen_residual(const Mat3& h, cplx e, const Vec3& v) {
  return (h * v - e * v).norm();
}

}  // namespace detail

/// Eigenvalues of an arbitrary 3x3 matrix sorted by (Re, Im) ascending;
/// eigenvectors from the null space of (H - E I).
inline Spectrum eigensolve(const Mat3& h, bool want_vectors = false) {
  Spectrum out;
  out.eigenvalues = solve_cubic(characteristic_polynomial(h));
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), detail::less_re_im);
  if (want_vectors) {
    std::array<Vec3, 3> vecs;
    for (int i = 0; i < 3; ++i)
      vecs[i] = detail::null_vector(h - out.eigenvalues[i] * Mat3::Identity());
    out.eigenvectors = vecs;
  }
  return out;
}

/// Closed-form eigenvector (-1 + (c1+E)(c2+E), -(c1+E), 1) of the family,
/// normalized. Falls back to the null space of (H - E I) when the closed form
/// degenerates.
inline Vec3 family_eigenvector(const PolyCoeffs& c, cplx e) {
  const Mat3 h = hamiltonian_from_coeffs(c);
  Vec3 v(-1.0 + (c.c1 + e) * (c.c2 + e), -(c.c1 + e), 1.0);
  v.normalize();
  const double scale = 1.0 + h.norm();
  if (detail::eigen_residual(h, e, v) <= 1e-8 * scale) return v;
  Vec3 alt = detail::null_vector(h - e * Mat3::Identity());
  return detail::eigen_residual(h, e, alt) < detail::eigen_residual(h, e, v) ? alt : v;
}

inline Spectrum eigensolve(const ModelParams& p, bool want_vectors = false) {
  const auto c = poly_coeffs(p);
  Spectrum out;
  out.eigenvalues = solve_cubic(characteristic_polynomial(c));
  std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), detail::less_re_im);
  if (want_vectors) {
    std::array<Vec3, 3> vecs;
    for (int i = 0; i < 3; ++i) vecs[i] = family_eigenvector(c, out.eigenvalues[i]);
    out.eigenvectors = vecs;
  }
  return out;
}

/// Band labels: 1 = largest real part, ties broken by larger imaginary part.
inline Triple label_by_real_part(Triple e) {
  std::sort(e.begin(), e.end(), [](cplx a, cplx b) {
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  return e;
}

inline double min_gap(const Triple& e) {
  return std::min({std::abs(e[0] - e[1]), std::abs(e[1] - e[2]), std::abs(e[0] - e[2])});
}

/// Permutation perm minimizing sum_i |prev[i] - next[perm[i]]|.
inline std::array<int, 3> best_matching(const Triple& prev, const Triple& next) {
  std::array<int, 3> perm{0, 1, 2};
  std::array<int, 3> best = perm;
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < 3; ++i) cost += std::abs(prev[i] - next[perm[i]]);
    if (cost < best_cost) {
      best_cost = cost;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

inline Triple apply_matching(const Triple& next, const std::array<int, 3>& perm) {
  return {next[perm[0]], next[perm[1]], next[perm[2]]};
}

/// Bands continued along a closed loop. bands[i][j] is band i at thetas[j];
/// thetas runs from 0 to 2*pi inclusive.
struct BandPath {
  Loop loop;
  std::vector<double> thetas;
  std::array<std::vector<cplx>, 3> bands;

  std::size_t size() const { return thetas.size(); }
  Triple at(std::size_t j) const { return {bands[0][j], bands[1][j], bands[2][j]}; }

  /// closure[i] = band label whose theta=0 value band i reaches at theta=2*pi.
  std::array<int, 3> closure_permutation() const {
    const Triple first = at(0);
    const Triple last = at(size() - 1);
    std::array<int, 3> perm{};
    for (int i = 0; i < 3; ++i) {
      int best = 0;
      for (int k = 1; k < 3; ++k)
        if (std::abs(last[i] - first[k]) < std::abs(last[i] - first[best])) best = k;
      perm[i] = best;
    }
    return perm;
  }
};

inline constexpr double kEpOnLoopThreshold = 1e-6;

namespace detail {

inline Triple loop_spectrum(const Loop& loop, double theta) {
  const ModelParams p = loop_point(loop, theta);
  if (std::abs(discriminant(p)) <= kEpOnLoopThreshold)
    throw Error(ErrorKind::EPOnLoop, "discriminant vanishes on the loop at theta=" +
                                         std::to_string(theta));
  return solve_cubic(characteristic_polynomial(poly_coeffs(p)));
}

inline double wrap_angle(double x) {
  x = std::remainder(x, 2.0 * kPi);
  return x;
}

// Step acceptance: every band moves less than half the smallest gap at both
// ends, and no pairwise difference rotates by more than pi/4.
inline bool step_ok(const Triple& a, const Triple& b) {
  double max_step = 0.0;
  for (int i = 0; i < 3; ++i) max_step = std::max(max_step, std::abs(a[i] - b[i]));
  if (max_step > 0.5 * std::min(min_gap(a), min_gap(b))) return false;
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3;
    const double turn = std::abs(std::arg((b[i] - b[j]) / (a[i] - a[j])));
    if (turn > kPi / 4.0) return false;
  }
  return true;
}

}  // namespace detail

/// Continues the three bands around the loop, bisecting steps until the
/// matching between neighbours is unambiguous.
inline BandPath track_bands(const Loop& loop, int n_min = 64) {
  if (!(loop.radius > 0.0)) throw Error(ErrorKind::InvalidArgument, "loop radius must be positive");
  if (n_min < 4) throw Error(ErrorKind::InvalidArgument, "n_min must be at least 4");

  BandPath path;
  path.loop = loop;
  const double two_pi = 2.0 * kPi;

  Triple current = label_by_real_part(detail::loop_spectrum(loop, 0.0));
  double theta = 0.0;
  auto push = [&](double t, const Triple& e) {
    path.thetas.push_back(t);
    for (int i = 0; i < 3; ++i) path.bands[i].push_back(e[i]);
  };
  push(theta, current);

  const double coarse = two_pi / n_min;
  for (int j = 1; j <= n_min; ++j) {
    const double target = j == n_min ? two_pi : j * coarse;
    while (theta < target) {
      double step = target - theta;
      bool full = true;
      for (;;) {
        if (step < 1e-12)
          throw Error(ErrorKind::EPOnLoop, "bands cannot be separated near theta=" +
                                               std::to_string(theta));
        const double next_theta = full ? target : theta + step;
        const Triple raw = detail::loop_spectrum(loop, next_theta);
        const Triple next = apply_matching(raw, best_matching(current, raw));
        if (detail::step_ok(current, next)) {
          theta = next_theta;
          current = next;
          push(theta, current);
          break;
        }
        step *= 0.5;
        full = false;
      }
    }
  }
  return path;
}

/// phi_ij(theta) = -arg(E_i - E_j), continuously unwrapped from theta=0.
/// Series are ordered (1,2), (2,3), (3,1).
struct RelativePhases {
  std::vector<double> thetas;
  std::array<std::vector<double>, 3> series;
  static constexpr std::array<std::array<int, 2>, 3> pairs{{{1, 2}, {2, 3}, {3, 1}}};
};

inline RelativePhases relative_phases(const BandPath& path) {
  RelativePhases out;
  out.thetas = path.thetas;
  for (int s = 0; s < 3; ++s) {
    const int i = RelativePhases::pairs[s][0] - 1;
    const int j = RelativePhases::pairs[s][1] - 1;
    auto& series = out.series[s];
    series.reserve(path.size());
    for (std::size_t k = 0; k < path.size(); ++k) {
      const cplx diff = path.bands[i][k] - path.bands[j][k];
      if (std::abs(diff) < 1e-10)
        throw Error(ErrorKind::DegenerateBands, "bands coincide at theta=" +
                                                    std::to_string(path.thetas[k]));
      const double raw = -std::arg(diff);
      series.push_back(k == 0 ? raw : series.back() + detail::wrap_angle(raw - series.back()));
    }
  }
  return out;
}

/// tau_{ij}: Re E_i = Re E_j with Im E_i < Im E_j, i.e. band j passes band i
/// from above. Labels are 1-based continuation labels.
struct CrossingEvent {
  double theta = 0.0;
  int i = 0;
  int j = 0;

  bool operator==(const CrossingEvent&) const = default;
};

namespace detail {

inline Triple matched_spectrum(const Loop& loop, double theta, const Triple& reference) {
  const Triple raw = loop_spectrum(loop, theta);
  return apply_matching(raw, best_matching(reference, raw));
}

}  // namespace detail

/// Real-part crossings along the path, located by bisection and sorted by theta.
inline std::vector<CrossingEvent> detect_crossings(const BandPath& path) {
  std::vector<CrossingEvent> events;
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      for (std::size_t k = 0; k + 1 < path.size(); ++k) {
        const double d0 = (path.bands[a][k] - path.bands[b][k]).real();
        const double d1 = (path.bands[a][k + 1] - path.bands[b][k + 1]).real();
        if ((d0 < 0.0) == (d1 < 0.0)) continue;

        double lo = path.thetas[k];
        double hi = path.thetas[k + 1];
        Triple e_lo = path.at(k);
        while (hi - lo > 1e-10) {
          const double mid = 0.5 * (lo + hi);
          const Triple e_mid = detail::matched_spectrum(path.loop, mid, e_lo);
          if (((e_mid[a] - e_mid[b]).real() < 0.0) == (d0 < 0.0)) {
            lo = mid;
            e_lo = e_mid;
          } else {
            hi = mid;
          }
        }
        const double theta = 0.5 * (lo + hi);
        const Triple e_c = detail::matched_spectrum(path.loop, theta, e_lo);
        const double h = 1e-5;
        const Triple e_m = detail::matched_spectrum(path.loop, theta - h, e_c);
        const Triple e_p = detail::matched_spectrum(path.loop, theta + h, e_c);
        const double slope = ((e_p[a] - e_p[b]).real() - (e_m[a] - e_m[b]).real()) / (2.0 * h);
        if (std::abs(slope) < 1e-8)
          throw Error(ErrorKind::TangentialCrossing,
                      "non-transversal crossing at theta=" + std::to_string(theta));
        const double im = (e_c[a] - e_c[b]).imag();
        if (std::abs(im) < 1e-10)
          throw Error(ErrorKind::DegenerateBands, "bands coincide at theta=" + std::to_string(theta));
        if (im < 0.0)
          events.push_back({theta, a + 1, b + 1});
        else
          events.push_back({theta, b + 1, a + 1});
      }
    }
  }
  std::sort(events.begin(), events.end(),
            [](const CrossingEvent& x, const CrossingEvent& y) { return x.theta < y.theta; });
  // Three real parts meeting at once have no crossing order.
  for (std::size_t k = 0; k + 1 < events.size(); ++k)
    if (events[k + 1].theta - events[k].theta < 1e-7)
      throw Error(ErrorKind::TangentialCrossing,
                  "simultaneous crossings at theta=" + std::to_string(events[k].theta));
  return events;
}

}  // namespace nhbraid
