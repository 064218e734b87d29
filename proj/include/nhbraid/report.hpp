#pragma once

// Batch pipelines behind the command-line front end. Each builder validates a
// plain config struct and returns a plain report; serialization lives with
// the tool.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "nhbraid/braid.hpp"
#include "nhbraid/dilation.hpp"
#include "nhbraid/eps.hpp"
#include "nhbraid/reconstruct.hpp"
#include "nhbraid/spectral.hpp"

namespace nhbraid {

#ifdef NHBRAID_VERSION
inline constexpr const char* kVersion = NHBRAID_VERSION;
#else
inline constexpr const char* kVersion = "0.0.0";
#endif

/// Named numeric columns of equal length.
struct Series {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> data;  // data[c] is column c

  void add_row(std::initializer_list<double> row) {
    if (data.empty()) data.resize(columns.size());
    std::size_t c = 0;
    for (double v : row) data.at(c++).push_back(v);
  }
};

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, what);
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct BraidScanConfig {
  double alpha = 0.39;
  double r = 1.4;
  Point2 center{0.0, 0.0};
  int n_samples = 64;

  void validate() const {
    detail::require(std::isfinite(alpha), "alpha must be finite");
    detail::require(r > 0.0 && std::isfinite(r), "r must be positive");
    detail::require(std::isfinite(center[0]) && std::isfinite(center[1]), "center must be finite");
    detail::require(n_samples >= 16, "n_samples must be at least 16");
  }
};

struct BraidScanReport {
  BraidScanConfig config;
  BandPath path;
  RelativePhases phases;
  std::vector<CrossingEvent> crossings;
  BraidWord word, reduced;
  Permutation permutation;
  int exponent_sum = 0;
  Equivalence identity = Equivalence::Different;  // reduced word vs the trivial braid
  std::vector<EpRecord> enclosed;                 // EPs strictly inside the loop
  std::optional<int> enclosed_charge;             // sum of their charges when all were classified
  std::vector<std::string> notes;
};

inline BraidScanReport braid_scan(const BraidScanConfig& cfg) {
  cfg.validate();
  BraidScanReport rep;
  rep.config = cfg;
  const Loop loop{cfg.alpha, cfg.r, cfg.center};
  rep.path = track_bands(loop, cfg.n_samples);
  rep.phases = relative_phases(rep.path);
  rep.crossings = detect_crossings(rep.path);
  rep.word = tau_to_sigma(rep.crossings);
  rep.reduced = free_reduce(rep.word);
  rep.permutation = permutation_of(rep.word);
  rep.exponent_sum = exponent_sum(rep.word);
  rep.identity = check_equivalence(rep.reduced, BraidWord{3, {}}, false);

  try {
    const auto found = catalog_eps(cfg.alpha, Region::centered(cfg.center, cfg.r));
    int total = 0;
    bool complete = true;
    for (const auto& ep : found) {
      if (distance(ep.position, cfg.center) >= cfg.r) continue;
      rep.enclosed.push_back(ep);
      if (ep.charge) total += *ep.charge;
      else complete = false;
    }
    if (complete) rep.enclosed_charge = total;
  } catch (const Error& e) {
    rep.notes.push_back(std::string("enclosed EP catalog unavailable: ") + e.what());
  }
  return rep;
}

// ---------------------------------------------------------------------------

struct OrderQuery {
  double alpha = 0.0;
  Point2 point{0.0, 0.0};
};

struct ChargeQuery {
  double alpha = 0.0;
  Point2 point{0.0, 0.0};
  double radius = 0.5;
};

struct EpAtlasConfig {
  double alpha_min = 0.0;
  double alpha_max = 3.2;
  double step = 0.01;
  bool trace = true;
  std::vector<OrderQuery> order_at;
  std::vector<ChargeQuery> charge_at;

  void validate() const {
    detail::require(std::isfinite(alpha_min) && std::isfinite(alpha_max) && alpha_min < alpha_max,
                    "alpha range must be finite and increasing");
    detail::require(step > 0.0 && step <= 0.1, "step must be in (0, 0.1]");
    for (const auto& q : charge_at) detail::require(q.radius > 0.0, "charge radius must be positive");
  }
};

struct ChargeAnswer {
  ChargeQuery query;
  int charge = 0;
};

struct OrderAnswer {
  OrderQuery query;
  OrderReport report;
};

struct EpAtlasReport {
  EpAtlasConfig config;
  std::vector<EpTrajectory> trajectories;
  std::vector<OrderAnswer> orders;
  std::vector<ChargeAnswer> charges;
};

inline EpAtlasReport ep_atlas(const EpAtlasConfig& cfg) {
  cfg.validate();
  EpAtlasReport rep;
  rep.config = cfg;
  if (cfg.trace) {
    TraceOptions opt;
    opt.step = cfg.step;
    rep.trajectories = trace_ep_paths(cfg.alpha_min, cfg.alpha_max, opt);
  }
  for (const auto& q : cfg.order_at) rep.orders.push_back({q, ep_order_near(q.alpha, q.point)});
  for (const auto& q : cfg.charge_at) rep.charges.push_back({q, charge(q.alpha, q.point, q.radius)});
  return rep;
}

// ---------------------------------------------------------------------------

struct TransitionConfig {
  double r = 1.4;
  double alpha_max = 3.2;
  double step = 0.01;

  void validate() const {
    detail::require(r > 0.0 && std::isfinite(r), "r must be positive");
    detail::require(alpha_max > 0.0 && std::isfinite(alpha_max), "alpha_max must be positive");
    detail::require(step > 0.0 && step <= 0.1, "step must be in (0, 0.1]");
  }
};

struct TransitionReport {
  TransitionConfig config;
  double alpha0 = 0.0;
  Series radius;  // |k_U| and |k_V| against alpha
  std::vector<EpEvent> events;
};

inline TransitionReport transition(const TransitionConfig& cfg) {
  cfg.validate();
  TransitionReport rep;
  rep.config = cfg;
  TraceOptions opt;
  opt.step = cfg.step;
  const auto paths = trace_ep_paths(0.0, cfg.alpha_max, opt);
  rep.alpha0 = transition_alpha(cfg.r, paths);
  rep.radius.name = "r_U";
  rep.radius.columns = {"alpha", "k1", "k2", "r"};
  rep.radius.data.resize(4);
  if (const EpTrajectory* u = find_trajectory(paths, "U")) {
    for (const auto& s : u->samples)
      rep.radius.add_row({s.alpha, s.position[0], s.position[1], std::hypot(s.position[0], s.position[1])});
    rep.events = u->events;
  }
  return rep;
}

// ---------------------------------------------------------------------------

struct DilateConfig {
  double alpha = 1.0;
  Point2 k{0.2, 0.3};
  double T = 2.0;
  int steps = 100;
  double scale = 1.0;
  std::optional<double> gamma;  // empty: smallest shift keeping M - I positive
  double m0 = 1.3;              // M(0) = m0 I
  Vec3 psi0 = Vec3(1.0, 1.0, 1.0) / std::sqrt(3.0);

  void validate() const {
    detail::require(std::isfinite(alpha) && std::isfinite(k[0]) && std::isfinite(k[1]), "parameters must be finite");
    detail::require(T > 0.0 && std::isfinite(T), "T must be positive");
    detail::require(steps >= 1, "steps must be positive");
    detail::require(scale != 0.0 && std::isfinite(scale), "scale must be nonzero");
    detail::require(!gamma || *gamma >= 0.0, "gamma must be non-negative");
    detail::require(m0 > 1.0 && std::isfinite(m0), "M(0) must exceed the identity");
    detail::require(psi0.norm() > 0.0, "psi0 must be nonzero");
  }
};

struct DilateReport {
  DilateConfig config;
  double gamma = 0.0;
  double min_margin = 0.0;
  double max_antihermitian = 0.0;  // max entrywise |A - A^+| over Xi and Lambda
  EmbeddingReport embedding;
  Series margin;
};

inline DilateReport dilate_verify(const DilateConfig& cfg) {
  cfg.validate();
  DilateReport rep;
  rep.config = cfg;
  const Mat3 h = hamiltonian({cfg.alpha, cfg.k[0], cfg.k[1]});
  DilationOptions opt;
  opt.M0 = cfg.m0 * Mat3::Identity();
  opt.scale = cfg.scale;
  opt.steps = cfg.steps;
  opt.gamma = cfg.gamma ? *cfg.gamma : dissipative_shift(cfg.scale * h);
  rep.gamma = opt.gamma;
  const DilationBundle b = build_dilation(h, cfg.T, opt);
  rep.min_margin = b.min_margin;
  rep.margin.name = "metric";
  rep.margin.columns = {"t", "margin", "antihermitian"};
  rep.margin.data.resize(3);
  for (std::size_t j = 0; j < b.time_grid.size(); ++j) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(b.M[j] - Mat3::Identity());
    const double ah = std::max((b.Xi[j] - b.Xi[j].adjoint()).cwiseAbs().maxCoeff(),
                               (b.Lambda[j] - b.Lambda[j].adjoint()).cwiseAbs().maxCoeff());
    rep.max_antihermitian = std::max(rep.max_antihermitian, ah);
    rep.margin.add_row({b.time_grid[j], es.eigenvalues().minCoeff(), ah});
  }
  rep.embedding = verify_embedding(b, cfg.psi0);
  return rep;
}

// ---------------------------------------------------------------------------

struct ReconstructConfig {
  double alpha = 0.39;
  double r = 1.4;
  Point2 center{0.0, 0.0};
  double theta = 11.0 * kPi / 8.0;
  double noise = 0.0;  // relative Gaussian noise on each ratio
  int trials = 200;
  std::optional<std::uint64_t> seed;
  bool use_prior = true;
  std::optional<std::array<int, 2>> which;

  void validate() const {
    detail::require(std::isfinite(alpha) && std::isfinite(theta), "alpha and theta must be finite");
    detail::require(r > 0.0 && std::isfinite(r), "r must be positive");
    detail::require(noise >= 0.0 && std::isfinite(noise), "noise must be non-negative");
    detail::require(trials >= 1, "trials must be positive");
    detail::require(noise == 0.0 || seed.has_value(), "a seed is required when noise > 0");
  }
};

/// Monte Carlo summary of one recovered eigenvalue.
struct EigenStats {
  cplx mean{0.0, 0.0};
  double sd_re = 0.0, sd_im = 0.0;
};

struct ReconstructReport {
  ReconstructConfig config;
  ModelParams point;
  EigenTriple truth{};
  PopulationRatios ratios;
  Reconstruction clean;
  double clean_error = 0.0;  // max label-wise distance to truth
  std::optional<std::array<EigenStats, 3>> stats;
  int within_tol = 0;  // trials whose triple lies within 0.1 of truth
  int failed_trials = 0;
  Series trials;
};

inline double labelwise_distance(const EigenTriple& a, const EigenTriple& b) {
  double d = 0.0;
  for (int i = 0; i < 3; ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline ReconstructReport reconstruct_demo(const ReconstructConfig& cfg) {
  cfg.validate();
  ReconstructReport rep;
  rep.config = cfg;
  rep.point = loop_point(Loop{cfg.alpha, cfg.r, cfg.center}, cfg.theta);
  const auto spec = eigensolve(rep.point);
  rep.truth = {spec.eigenvalues[0], spec.eigenvalues[1], spec.eigenvalues[2]};
  rep.ratios = forward_ratios(rep.point, cfg.which);

  SolveOptions opt;
  if (cfg.use_prior) opt.alpha = cfg.alpha;
  if (cfg.seed) opt.seed = *cfg.seed;
  rep.clean = solve_eigenvalues(rep.ratios, opt);
  rep.clean_error = labelwise_distance(rep.clean.best.eigenvalues, rep.truth);

  if (cfg.noise > 0.0) {
    std::mt19937_64 rng(*cfg.seed);
    rep.trials.name = "trials";
    rep.trials.columns = {"trial", "re1", "im1", "re2", "im2", "re3", "im3", "residual"};
    rep.trials.data.resize(rep.trials.columns.size());
    std::array<double, 3> s_re{}, s_im{}, q_re{}, q_im{};
    int n = 0;
    for (int t = 0; t < cfg.trials; ++t) {
      const PopulationRatios noisy = add_ratio_noise(rep.ratios, cfg.noise, rng);
      SolveOptions o = opt;
      o.seed = rng();
      o.seeds = 16;
      try {
        const auto rec = solve_eigenvalues(noisy, o);
        const auto& e = rec.best.eigenvalues;
        rep.trials.add_row({double(t), e[0].real(), e[0].imag(), e[1].real(), e[1].imag(), e[2].real(),
                            e[2].imag(), rec.best.residual});
        if (labelwise_distance(e, rep.truth) < 0.1) ++rep.within_tol;
        for (int i = 0; i < 3; ++i) {
          s_re[i] += e[i].real();
          s_im[i] += e[i].imag();
          q_re[i] += e[i].real() * e[i].real();
          q_im[i] += e[i].imag() * e[i].imag();
        }
        ++n;
      } catch (const Error&) {
        ++rep.failed_trials;
      }
    }
    if (n > 1) {
      std::array<EigenStats, 3> st{};
      for (int i = 0; i < 3; ++i) {
        const double mr = s_re[i] / n, mi = s_im[i] / n;
        st[i].mean = {mr, mi};
        st[i].sd_re = std::sqrt(std::max(0.0, (q_re[i] - n * mr * mr) / (n - 1)));
        st[i].sd_im = std::sqrt(std::max(0.0, (q_im[i] - n * mi * mi) / (n - 1)));
      }
      rep.stats = st;
    }
  }
  return rep;
}

}  // namespace nhbraid
