#pragma once

// Exceptional points of the family: zeros of the discriminant in the
// (k1, k2) plane, their winding charges, their order, and their motion as
// alpha varies.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nhbraid/braid.hpp"
#include "nhbraid/linalg.hpp"
#include "nhbraid/model.hpp"
#include "nhbraid/spectral.hpp"

namespace nhbraid {

using Point2 = std::array<double, 2>;

inline double distance(const Point2& a, const Point2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

struct Region {
  double k1_min = -2.0, k1_max = 2.0;
  double k2_min = -2.0, k2_max = 2.0;

  static Region centered(const Point2& c, double half_width) {
    return {c[0] - half_width, c[0] + half_width, c[1] - half_width, c[1] + half_width};
  }

  bool contains(const Point2& k, double slack = 0.0) const {
    return k[0] >= k1_min - slack && k[0] <= k1_max + slack && k[1] >= k2_min - slack &&
           k[1] <= k2_max + slack;
  }

  void validate() const {
    if (!(std::isfinite(k1_min) && std::isfinite(k1_max) && std::isfinite(k2_min) &&
          std::isfinite(k2_max)) ||
        !(k1_min < k1_max) || !(k2_min < k2_max))
      throw Error(ErrorKind::InvalidArgument, "region must be a finite non-empty rectangle");
  }
};

struct EpRecord {
  double alpha = 0.0;
  Point2 position{0.0, 0.0};
  std::optional<int> charge;
  int order = 0;                                // 0 = not classified
  std::optional<std::array<int, 2>> degenerate_pair;  // empty with order 3 = all bands
  double residual = 0.0;                        // |discriminant| at position

  std::string pair_label() const {
    if (order == 3) return "all";
    if (!degenerate_pair) return "";
    return std::to_string((*degenerate_pair)[0]) + "-" + std::to_string((*degenerate_pair)[1]);
  }
};

inline constexpr double kEpResidual = 1e-10;
inline constexpr double kEpDedup = 1e-6;

namespace detail {

inline Eigen::Matrix2d real_jacobian(const DiscriminantJet& j) {
  Eigen::Matrix2d m;
  m << j.d_k1.real(), j.d_k2.real(), j.d_k1.imag(), j.d_k2.imag();
  return m;
}

struct NewtonResult {
  Point2 k{0.0, 0.0};
  double residual = 0.0;
  bool converged = false;
};

// Damped Newton on (k1, k2) -> (Re D, Im D). The SVD solve tolerates the
// singular Jacobian at higher-order zeros, where convergence becomes linear.
inline NewtonResult newton_zero(double alpha, Point2 k, int max_iter = 200) {
  double f = std::abs(discriminant({alpha, k[0], k[1]}));
  for (int it = 0; it < max_iter && f > 0.0; ++it) {
    const auto jet = discriminant_jet({alpha, k[0], k[1]});
    const Eigen::Vector2d rhs(jet.value.real(), jet.value.imag());
    Eigen::JacobiSVD<Eigen::Matrix2d> svd(real_jacobian(jet), Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Eigen::Vector2d step = svd.solve(rhs);
    if (!step.allFinite()) break;
    bool accepted = false;
    for (double lam = 1.0; lam > 1e-4; lam *= 0.5) {
      const Point2 trial{k[0] - lam * step(0), k[1] - lam * step(1)};
      const double ft = std::abs(discriminant({alpha, trial[0], trial[1]}));
      if (ft < f) {
        k = trial;
        f = ft;
        accepted = true;
        break;
      }
    }
    if (!accepted || step.norm() < 1e-16 * (1.0 + std::hypot(k[0], k[1]))) break;
    if (std::hypot(k[0], k[1]) > 1e6) break;
  }
  return {k, f, f <= kEpResidual};
}

}  // namespace detail

/// Zeros of the discriminant inside the region from a grid x grid lattice of
/// Newton seeds, deduplicated within 1e-6.
inline std::vector<EpRecord> find_eps(double alpha, const Region& region, int grid = 32) {
  region.validate();
  if (!std::isfinite(alpha)) throw Error(ErrorKind::InvalidArgument, "alpha must be finite");
  if (grid < 1) throw Error(ErrorKind::InvalidArgument, "grid must be positive");
  std::vector<EpRecord> out;
  const double w1 = region.k1_max - region.k1_min;
  const double w2 = region.k2_max - region.k2_min;
  for (int a = 0; a < grid; ++a) {
    for (int b = 0; b < grid; ++b) {
      const Point2 seed{region.k1_min + (a + 0.5) * w1 / grid, region.k2_min + (b + 0.5) * w2 / grid};
      const auto r = detail::newton_zero(alpha, seed);
      if (!r.converged || !region.contains(r.k)) continue;
      const bool dup = std::any_of(out.begin(), out.end(), [&](const EpRecord& e) {
        return distance(e.position, r.k) < kEpDedup;
      });
      if (!dup) out.push_back({alpha, r.k, std::nullopt, 0, std::nullopt, r.residual});
    }
  }
  std::sort(out.begin(), out.end(), [](const EpRecord& x, const EpRecord& y) {
    return x.position[0] != y.position[0] ? x.position[0] < y.position[0] : x.position[1] < y.position[1];
  });
  return out;
}

/// Winding of arg D along the counter-clockwise circle, as a real number
/// -(total change of arg)/(2 pi). Steps are bisected while they turn by more
/// than pi/4.
inline double winding_number(double alpha, const Point2& center, double radius, int n_initial = 128) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw Error(ErrorKind::InvalidArgument, "radius must be positive");
  auto disc_at = [&](double t) {
    const cplx d = discriminant({alpha, center[0] + radius * std::cos(t), center[1] + radius * std::sin(t)});
    if (d == 0.0)
      throw Error(ErrorKind::PhaseStepTooLarge, "discriminant vanishes on the circle");
    return d;
  };
  const double two_pi = 2.0 * kPi;
  double total = 0.0;
  cplx prev = disc_at(0.0);
  for (int s = 1; s <= n_initial; ++s) {
    const double t0 = (s - 1) * two_pi / n_initial;
    const double t1 = s == n_initial ? two_pi : s * two_pi / n_initial;
    // Explicit stack of (start, end, value at start) segments.
    std::vector<std::array<double, 2>> stack{{t0, t1}};
    cplx f0 = prev;
    while (!stack.empty()) {
      auto [a, b] = stack.back();
      const cplx fb = b == two_pi ? disc_at(0.0) : disc_at(b);
      const double turn = std::arg(fb / f0);
      if (std::abs(turn) > kPi / 4.0 && b - a > 1e-12) {
        stack.back() = {0.5 * (a + b), b};
        stack.push_back({a, 0.5 * (a + b)});
        continue;
      }
      if (std::abs(turn) > kPi / 2.0)
        throw Error(ErrorKind::PhaseStepTooLarge, "phase step too large near t=" + std::to_string(a));
      total += turn;
      f0 = fb;
      stack.pop_back();
    }
    prev = f0;
  }
  return -total / two_pi;
}

/// Integer charge of the region enclosed by the circle.
inline int charge(double alpha, const Point2& center, double radius) {
  const double nu = winding_number(alpha, center, radius);
  const double n = std::round(nu);
  if (std::abs(nu - n) >= 0.05)
    throw Error(ErrorKind::NonIntegerWinding, "winding " + std::to_string(nu) + " is not an integer");
  return static_cast<int>(n);
}

struct OrderReport {
  int order = 0;
  std::optional<std::array<int, 2>> pair;  // 1-based labels; empty for order 3
  Eigen::Matrix3d fidelity = Eigen::Matrix3d::Identity();
  Triple eigenvalues{};                     // labelled by descending real part
  Point2 position{0.0, 0.0};                // after polishing
  double residual = 0.0;
};

/// Order of the EP at (or within 1e-3 of) the given point. Eigenvalues are
/// grouped within 1e-6, a group counts when all its eigenvector fidelities
/// exceed 0.999.
inline OrderReport ep_order(double alpha, const Point2& point) {
  Point2 k = point;
  const auto polished = detail::newton_zero(alpha, point);
  if (polished.converged && distance(polished.k, point) <= 1e-3) k = polished.k;
  const ModelParams p{alpha, k[0], k[1]};
  const double residual = std::abs(discriminant(p));
  if (!(residual <= 1e-8))
    throw Error(ErrorKind::NotAnEp, "discriminant " + std::to_string(residual) + " at the point");

  const PolyCoeffs c = poly_coeffs(p);
  const Cubic poly = characteristic_polynomial(c);
  Triple e = label_by_real_part(solve_cubic(poly));

  // A triple root splits by ~eps^(1/3) under Cardano; snap it to -b/3 when the
  // cubic is algebraically a perfect cube.
  const double scale = 1.0 + std::abs(poly.b) * std::abs(poly.b) + std::abs(poly.c);
  const bool cube = std::abs(poly.b * poly.b - 3.0 * poly.c) <= 1e-10 * scale &&
                    std::abs(poly.b * poly.c - 9.0 * poly.d) <= 1e-10 * scale * (1.0 + std::abs(poly.b));
  if (cube) e.fill(-poly.b / 3.0);

  std::array<Mat3, 3> rho;
  for (int i = 0; i < 3; ++i) rho[i] = density_matrix(family_eigenvector(c, e[i]));
  OrderReport rep;
  rep.eigenvalues = e;
  rep.position = k;
  rep.residual = residual;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rep.fidelity(i, j) = i == j ? 1.0 : fidelity(rho[i], rho[j]);

  auto linked = [&](int i, int j) { return std::abs(e[i] - e[j]) < 1e-6 && rep.fidelity(i, j) > 0.999; };
  if (linked(0, 1) && linked(1, 2) && linked(0, 2)) {
    rep.order = 3;
    return rep;
  }
  for (auto [i, j] : {std::array<int, 2>{1, 2}, {0, 1}, {0, 2}}) {
    if (linked(i, j)) {
      rep.order = 2;
      rep.pair = std::array<int, 2>{i + 1, j + 1};
      return rep;
    }
  }
  throw Error(ErrorKind::NotAnEp, "no coalescing eigenpair at the point");
}

/// ep_order at the zero nearest to an approximate location (such as a
/// rounded coordinate), searched within the capture box.
inline OrderReport ep_order_near(double alpha, const Point2& guess, double capture = 0.05) {
  const auto eps = find_eps(alpha, Region::centered(guess, capture), 8);
  const EpRecord* best = nullptr;
  for (const auto& e : eps)
    if (distance(e.position, guess) <= capture &&
        (!best || distance(e.position, guess) < distance(best->position, guess)))
      best = &e;
  if (!best) throw Error(ErrorKind::NotAnEp, "no exceptional point within " + std::to_string(capture));
  return ep_order(alpha, best->position);
}

/// Largest radius (capped) for a circle around eps[index] that keeps every
/// other listed EP well outside.
inline double isolation_radius(const std::vector<EpRecord>& eps, std::size_t index, double cap = 0.5) {
  double r = cap;
  for (std::size_t j = 0; j < eps.size(); ++j)
    if (j != index) r = std::min(r, 0.45 * distance(eps[j].position, eps[index].position));
  return r;
}

/// find_eps with charge and order filled in.
inline std::vector<EpRecord> catalog_eps(double alpha, const Region& region, int grid = 32) {
  auto eps = find_eps(alpha, region, grid);
  // Charges need every nearby zero, including those just outside the region.
  const double pad = 0.5;
  const auto wide = find_eps(alpha, {region.k1_min - pad, region.k1_max + pad, region.k2_min - pad,
                                     region.k2_max + pad}, grid);
  for (auto& ep : eps) {
    std::vector<EpRecord> all = wide;
    std::size_t idx = all.size();
    for (std::size_t j = 0; j < all.size(); ++j)
      if (distance(all[j].position, ep.position) < kEpDedup) idx = j;
    if (idx == all.size()) {
      all.push_back(ep);
      idx = all.size() - 1;
    }
    ep.charge = charge(alpha, ep.position, isolation_radius(all, idx));
    const auto ord = ep_order(alpha, ep.position);
    ep.order = ord.order;
    ep.degenerate_pair = ord.pair;
  }
  return eps;
}

/// Braid word read off along a circle.
inline BraidWord local_braid(double alpha, const Point2& center, double radius, int n_samples = 64) {
  const BandPath path = track_bands({alpha, radius, center}, n_samples);
  return tau_to_sigma(detect_crossings(path));
}

// ---------------------------------------------------------------------------
// Trajectories in alpha.

enum class EpEventKind { Creation, Annihilation, Merge };

inline const char* to_string(EpEventKind k) {
  switch (k) {
    case EpEventKind::Creation: return "creation";
    case EpEventKind::Annihilation: return "annihilation";
    case EpEventKind::Merge: return "merge";
  }
  return "?";
}

struct EpEvent {
  EpEventKind kind = EpEventKind::Creation;
  double alpha = 0.0;
  Point2 position{0.0, 0.0};
};

struct EpSample {
  double alpha = 0.0;
  Point2 position{0.0, 0.0};
};

struct EpTrajectory {
  std::string label;
  int charge = 0;
  std::vector<EpSample> samples;
  std::vector<EpEvent> events;
};

struct TraceOptions {
  double step = 0.01;
  double min_step = 1e-5;
  Region region{-4.5, 4.5, -4.5, 4.5};
  int grid = 24;
};

namespace detail {

// Real Jacobian determinant of k -> D, i.e. Im(conj(dD/dk1) dD/dk2).
inline double fold_det(double alpha, const Point2& k) {
  const auto j = discriminant_jet({alpha, k[0], k[1]});
  return (std::conj(j.d_k1) * j.d_k2).imag();
}

// Square Newton solve of F(alpha, k1, k2) = 0 with a central-difference
// Jacobian. Returns nullopt when it fails to converge.
template <typename F>
std::optional<Eigen::Vector3d> newton3(F&& f, Eigen::Vector3d x, double tol, int max_iter = 60) {
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd fx = f(x);
    if (!fx.allFinite()) return std::nullopt;
    if (fx.norm() <= tol) return x;
    Eigen::MatrixXd jac(fx.size(), 3);
    for (int c = 0; c < 3; ++c) {
      const double h = 1e-7 * (1.0 + std::abs(x(c)));
      Eigen::Vector3d xp = x, xm = x;
      xp(c) += h;
      xm(c) -= h;
      jac.col(c) = (f(xp) - f(xm)) / (2.0 * h);
    }
    const Eigen::Vector3d step = jac.colPivHouseholderQr().solve(-fx);
    if (!step.allFinite()) return std::nullopt;
    double lam = 1.0;
    bool accepted = false;
    for (; lam > 1e-4; lam *= 0.5) {
      if (f(Eigen::Vector3d(x + lam * step)).norm() < fx.norm()) {
        accepted = true;
        break;
      }
    }
    if (!accepted) return fx.norm() <= 1e3 * tol ? std::optional(x) : std::nullopt;
    x += lam * step;
  }
  return f(x).norm() <= 1e3 * tol ? std::optional(x) : std::nullopt;
}

// Fold of the zero curve: D = 0 and the k-Jacobian is singular.
inline std::optional<EpEvent> refine_fold(double alpha, const Point2& k, EpEventKind kind) {
  auto f = [](const Eigen::Vector3d& x) {
    const cplx d = discriminant({x(0), x(1), x(2)});
    Eigen::VectorXd r(3);
    r << d.real(), d.imag(), fold_det(x(0), {x(1), x(2)});
    return r;
  };
  const auto x = newton3(f, Eigen::Vector3d(alpha, k[0], k[1]), 1e-12);
  if (!x) return std::nullopt;
  return EpEvent{kind, (*x)(0), {(*x)(1), (*x)(2)}};
}

// Triple root: b^2 = 3c and bc = 9d for the characteristic cubic.
inline std::optional<EpEvent> refine_merge(double alpha, const Point2& k) {
  auto f = [](const Eigen::Vector3d& x) {
    const Cubic p = characteristic_polynomial(poly_coeffs({x(0), x(1), x(2)}));
    const cplx g1 = p.b * p.b - 3.0 * p.c;
    const cplx g2 = p.b * p.c - 9.0 * p.d;
    Eigen::VectorXd r(4);
    r << g1.real(), g1.imag(), g2.real(), g2.imag();
    return r;
  };
  // Over-determined; Gauss-Newton via the least-squares QR step in newton3.
  const auto x = newton3(f, Eigen::Vector3d(alpha, k[0], k[1]), 1e-12);
  if (!x) return std::nullopt;
  return EpEvent{EpEventKind::Merge, (*x)(0), {(*x)(1), (*x)(2)}};
}

struct Branch {
  std::vector<EpSample> samples;
  std::vector<EpEvent> events;
  int charge = 0;
  bool alive = true;

  const EpSample& last() const { return samples.back(); }
};

inline std::optional<Eigen::Vector2d> zero_tangent(double alpha, const Point2& k) {
  const auto jet = discriminant_jet({alpha, k[0], k[1]});
  const Eigen::Matrix2d jac = real_jacobian(jet);
  if (std::abs(jac.determinant()) < 1e-300) return std::nullopt;
  const Eigen::Vector2d t = jac.fullPivLu().solve(-Eigen::Vector2d(jet.d_alpha.real(), jet.d_alpha.imag()));
  if (!t.allFinite()) return std::nullopt;
  return t;
}

// Natural-parameter continuation of one branch up to `target`. Returns false
// if the step fell below min_step.
inline bool advance_branch(Branch& b, double target, const TraceOptions& opt) {
  double a = b.last().alpha;
  Point2 k = b.last().position;
  double h = std::min(opt.step, target - a);
  while (a < target - 1e-14) {
    h = std::min(h, target - a);
    if (h < opt.min_step && target - a >= opt.min_step) return false;
    const auto t = zero_tangent(a, k);
    if (!t) return false;
    const Point2 pred{k[0] + h * (*t)(0), k[1] + h * (*t)(1)};
    const auto corr = newton_zero(a + h, pred, 40);
    const double moved = distance(corr.k, k);
    const bool ok = corr.converged && moved <= 0.1 && distance(corr.k, pred) <= 0.3 * moved + 1e-8;
    if (ok) {
      a = std::min(a + h, target);
      k = corr.k;
      b.samples.push_back({a, k});
      h = std::min(2.0 * h, opt.step);
    } else {
      h *= 0.5;
      if (h < opt.min_step) return false;
    }
  }
  return true;
}

inline int point_charge(double alpha, const Point2& k, const std::vector<Point2>& others) {
  double r = 0.1;
  for (const auto& o : others) {
    const double d = distance(o, k);
    if (d > 1e-12) r = std::min(r, 0.4 * d);
  }
  return charge(alpha, k, r);
}

}  // namespace detail

/// Continues every discriminant zero across [alpha_begin, alpha_end],
/// recording pair creation, annihilation and triple-point merges. Labels:
/// the pair born inside the range (or merging) is X/Y, the pair that
/// annihilates is U/V, anything else W+/W-; the positively charged member
/// carries the first letter.
inline std::vector<EpTrajectory> trace_ep_paths(double alpha_begin, double alpha_end,
                                                const TraceOptions& opt = {}) {
  if (!(std::isfinite(alpha_begin) && std::isfinite(alpha_end)) || !(alpha_begin < alpha_end))
    throw Error(ErrorKind::InvalidArgument, "alpha range must be increasing");
  if (!(opt.step > 0.0) || !(opt.min_step > 0.0) || opt.min_step > opt.step)
    throw Error(ErrorKind::InvalidArgument, "invalid continuation step");
  opt.region.validate();

  using detail::Branch;
  std::vector<Branch> branches;

  auto positions_at = [](const std::vector<EpRecord>& eps) {
    std::vector<Point2> out;
    for (const auto& e : eps) out.push_back(e.position);
    return out;
  };

  {
    const auto eps = find_eps(alpha_begin, opt.region, opt.grid);
    const auto pts = positions_at(eps);
    for (const auto& e : eps) {
      Branch b;
      b.samples.push_back({alpha_begin, e.position});
      b.charge = detail::point_charge(alpha_begin, e.position, pts);
      branches.push_back(std::move(b));
    }
  }

  double alpha = alpha_begin;
  while (alpha < alpha_end - 1e-14) {
    const double next = std::min(alpha + opt.step, alpha_end);

    std::vector<std::size_t> stalled;
    for (std::size_t i = 0; i < branches.size(); ++i) {
      auto& b = branches[i];
      if (!b.alive) continue;
      if (b.last().alpha >= next - 1e-14) continue;  // already advanced past a merge
      if (!detail::advance_branch(b, next, opt)) stalled.push_back(i);
      else if (!opt.region.contains(b.last().position)) b.alive = false;
    }

    // Stalled branches come in pairs that collide: either a fold
    // (annihilation) or a passage through a triple point (merge).
    std::vector<bool> handled(stalled.size(), false);
    for (std::size_t s = 0; s < stalled.size(); ++s) {
      if (handled[s]) continue;
      auto& b = branches[stalled[s]];
      std::size_t best = stalled.size();
      double best_d = 0.05;
      for (std::size_t t = s + 1; t < stalled.size(); ++t) {
        if (handled[t]) continue;
        const double d = distance(branches[stalled[t]].last().position, b.last().position);
        if (d < best_d) {
          best_d = d;
          best = t;
        }
      }
      if (best == stalled.size())
        throw Error(ErrorKind::ContinuationStalled,
                    "continuation stalled at alpha=" + std::to_string(b.last().alpha));
      auto& partner = branches[stalled[best]];
      handled[s] = handled[best] = true;

      const double a_mid = 0.5 * (b.last().alpha + partner.last().alpha);
      const Point2 k_mid{0.5 * (b.last().position[0] + partner.last().position[0]),
                         0.5 * (b.last().position[1] + partner.last().position[1])};

      const auto merge = detail::refine_merge(a_mid, k_mid);
      if (merge && std::abs(merge->alpha - a_mid) < 1e-2 && distance(merge->position, k_mid) < 0.05) {
        for (Branch* x : {&b, &partner}) {
          x->samples.push_back({merge->alpha, merge->position});
          x->events.push_back(*merge);
        }
        // Re-seed both branches just past the triple point and assign by charge.
        const double after = merge->alpha + std::max(opt.step, 100.0 * opt.min_step);
        if (after > alpha_end) {
          b.alive = partner.alive = false;
          continue;
        }
        const auto local = find_eps(after, Region::centered(merge->position, 0.3), 12);
        if (local.size() != 2)
          throw Error(ErrorKind::ContinuationStalled,
                      "could not resolve branches after triple point at alpha=" + std::to_string(merge->alpha));
        const auto pts = positions_at(local);
        const int q0 = detail::point_charge(after, pts[0], pts);
        const int q1 = detail::point_charge(after, pts[1], pts);
        if (q0 == q1)
          throw Error(ErrorKind::ContinuationStalled, "branches after triple point share a charge");
        for (Branch* x : {&b, &partner})
          x->samples.push_back({after, x->charge == q0 ? pts[0] : pts[1]});
        continue;
      }

      const auto fold = detail::refine_fold(a_mid, k_mid, EpEventKind::Annihilation);
      if (!fold || std::abs(fold->alpha - a_mid) > 1e-2 || distance(fold->position, k_mid) > 0.05)
        throw Error(ErrorKind::ContinuationStalled,
                    "continuation stalled at alpha=" + std::to_string(a_mid));
      for (Branch* x : {&b, &partner}) {
        x->samples.push_back({fold->alpha, fold->position});
        x->events.push_back(*fold);
        x->alive = false;
      }
    }

    // Zeros at `next` that no live branch accounts for were just created.
    const auto eps = find_eps(next, opt.region, opt.grid);
    const auto pts = positions_at(eps);
    std::vector<Point2> fresh;
    for (const auto& p : pts) {
      const bool known = std::any_of(branches.begin(), branches.end(), [&](const Branch& b) {
        return b.alive && std::abs(b.last().alpha - next) < 1e-12 && distance(b.last().position, p) < 1e-6;
      });
      // Points sitting on a merge or fold resolved this step are not new.
      const bool at_event = std::any_of(branches.begin(), branches.end(), [&](const Branch& b) {
        return std::any_of(b.events.begin(), b.events.end(), [&](const EpEvent& e) {
          return std::abs(e.alpha - next) <= opt.step && distance(e.position, p) < 0.05;
        });
      });
      if (!known && !at_event) fresh.push_back(p);
    }
    std::vector<bool> used(fresh.size(), false);
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      if (used[i]) continue;
      used[i] = true;
      std::size_t j_best = fresh.size();
      double d_best = 0.25;
      for (std::size_t j = i + 1; j < fresh.size(); ++j)
        if (!used[j] && distance(fresh[i], fresh[j]) < d_best) {
          d_best = distance(fresh[i], fresh[j]);
          j_best = j;
        }
      std::optional<EpEvent> birth;
      if (j_best != fresh.size()) {
        used[j_best] = true;
        const Point2 mid{0.5 * (fresh[i][0] + fresh[j_best][0]), 0.5 * (fresh[i][1] + fresh[j_best][1])};
        birth = detail::refine_fold(next - 0.5 * opt.step, mid, EpEventKind::Creation);
        if (birth && (birth->alpha > next || birth->alpha < alpha - opt.step)) birth.reset();
      }
      for (std::size_t idx : {i, j_best}) {
        if (idx == fresh.size()) continue;
        Branch nb;
        if (birth) {
          nb.samples.push_back({birth->alpha, birth->position});
          nb.events.push_back(*birth);
        }
        nb.samples.push_back({next, fresh[idx]});
        nb.charge = detail::point_charge(next, fresh[idx], pts);
        branches.push_back(std::move(nb));
      }
    }
    alpha = next;
  }

  // Labels.
  std::vector<EpTrajectory> out;
  int extra = 0;
  for (auto& b : branches) {
    EpTrajectory t;
    t.charge = b.charge;
    t.samples = std::move(b.samples);
    t.events = std::move(b.events);
    auto has = [&](EpEventKind k) {
      return std::any_of(t.events.begin(), t.events.end(), [&](const EpEvent& e) { return e.kind == k; });
    };
    if (has(EpEventKind::Creation) || has(EpEventKind::Merge))
      t.label = t.charge > 0 ? "X" : "Y";
    else if (has(EpEventKind::Annihilation))
      t.label = t.charge > 0 ? "U" : "V";
    else
      t.label = t.charge > 0 ? "W+" : "W-";
    out.push_back(std::move(t));
  }
  // Disambiguate repeated labels.
  for (auto& t : out) {
    const auto n = std::count_if(out.begin(), out.end(), [&](const EpTrajectory& o) { return o.label == t.label; });
    if (n > 1) t.label += "#" + std::to_string(++extra);
  }
  return out;
}

inline const EpTrajectory* find_trajectory(const std::vector<EpTrajectory>& paths, const std::string& label) {
  for (const auto& t : paths)
    if (t.label == label) return &t;
  return nullptr;
}

/// alpha at which the U trajectory first reaches distance r from the origin.
inline double transition_alpha(double r, const std::vector<EpTrajectory>& paths) {
  if (!(r > 0.0) || !std::isfinite(r)) throw Error(ErrorKind::InvalidArgument, "r must be positive");
  const EpTrajectory* u = find_trajectory(paths, "U");
  if (!u || u->samples.size() < 2) throw Error(ErrorKind::OutOfRange, "no U trajectory in the traced range");
  auto g = [&](const Point2& k) { return k[0] * k[0] + k[1] * k[1] - r * r; };
  const auto& s = u->samples;
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    const double g0 = g(s[i].position), g1 = g(s[i + 1].position);
    if (g0 == 0.0) return s[i].alpha;
    if ((g0 > 0.0) == (g1 > 0.0)) continue;
    double lo = s[i].alpha, hi = s[i + 1].alpha;
    Point2 k_lo = s[i].position, k_hi = s[i + 1].position;
    double g_lo = g0;
    while (hi - lo > 1e-12) {
      const double mid = 0.5 * (lo + hi);
      const Point2 guess{0.5 * (k_lo[0] + k_hi[0]), 0.5 * (k_lo[1] + k_hi[1])};
      const auto corr = detail::newton_zero(mid, guess, 60);
      if (!corr.converged) break;  // sample spacing is the best available
      const double gm = g(corr.k);
      if ((gm > 0.0) == (g_lo > 0.0)) {
        lo = mid;
        k_lo = corr.k;
        g_lo = gm;
      } else {
        hi = mid;
        k_hi = corr.k;
      }
    }
    return 0.5 * (lo + hi);
  }
  throw Error(ErrorKind::OutOfRange, "r is outside the range swept by the U trajectory");
}

inline double transition_alpha(double r, double alpha_max = 3.2, const TraceOptions& opt = {}) {
  return transition_alpha(r, trace_ep_paths(0.0, alpha_max, opt));
}

}  // namespace nhbraid
