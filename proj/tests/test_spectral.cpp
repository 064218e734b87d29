#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "nhbraid/spectral.hpp"

using namespace nhbraid;

namespace {

const Loop kTrivialSection{0.39, 1.4, {0.0, 0.0}};
const Loop kTripleSection{3.0, 1.4, {0.0, 0.0}};

// Nearest-neighbour multiset comparison, independent of any ordering rule.
double multiset_distance(Triple a, Triple b) {
  double worst = 0.0;
  std::array<bool, 3> used{};
  for (const auto& x : a) {
    int best = -1;
    for (int k = 0; k < 3; ++k)
      if (!used[k] && (best < 0 || std::abs(x - b[k]) < std::abs(x - b[best]))) best = k;
    used[best] = true;
    worst = std::max(worst, std::abs(x - b[best]));
  }
  return worst;
}

Triple eigen_reference(const Mat3& h) {
  Eigen::ComplexEigenSolver<Mat3> es(h);
  return {es.eigenvalues()(0), es.eigenvalues()(1), es.eigenvalues()(2)};
}

}  // namespace

TEST(Spectral, TripleRootAtCubicPoint) {
  const auto s = eigensolve(hamiltonian({3.0, 0.0, 0.0}));
  // Roundoff eps in the coefficients moves a triple root by ~eps^(1/3).
  for (const auto& e : s.eigenvalues) EXPECT_LT(std::abs(e), 1e-6);
  for (const auto& e : eigensolve(ModelParams{3.0, 0.0, 0.0}).eigenvalues) EXPECT_LT(std::abs(e), 1e-6);
}

TEST(Spectral, HermitianInputGivesRealSpectrum) {
  Mat3 h;
  h << 2.0, cplx(1, 1), 0.5, cplx(1, -1), -1.0, cplx(0, 2), 0.5, cplx(0, -2), 0.3;
  const auto s = eigensolve(h, true);
  for (const auto& e : s.eigenvalues) EXPECT_LT(std::abs(e.imag()), 1e-12);
  for (int i = 0; i < 3; ++i)
    EXPECT_LT(((h - s.eigenvalues[i] * Mat3::Identity()) * (*s.eigenvectors)[i]).norm(), 1e-10);
}

TEST(Spectral, OrderingIsLexicographic) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int n = 0; n < 100; ++n) {
    const auto s = eigensolve(ModelParams{u(rng) + 1.0, u(rng), u(rng)});
    for (int i = 0; i + 1 < 3; ++i) {
      const auto a = s.eigenvalues[i], b = s.eigenvalues[i + 1];
      EXPECT_TRUE(a.real() < b.real() || (a.real() == b.real() && a.imag() <= b.imag()));
    }
  }
}

TEST(Spectral, RootsSatisfyCharacteristicPolynomial) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> ua(-1.0, 4.0);
  std::uniform_real_distribution<double> uk(-3.0, 3.0);
  for (int n = 0; n < 10000; ++n) {
    const ModelParams p{ua(rng), uk(rng), uk(rng)};
    const Cubic poly = characteristic_polynomial(poly_coeffs(p));
    const auto s = eigensolve(p);
    for (const auto& e : s.eigenvalues) {
      const double a = std::abs(e);
      EXPECT_LE(std::abs(poly(e)), 1e-9 * (1.0 + a * a * a));
    }
    EXPECT_LT(multiset_distance(s.eigenvalues, eigen_reference(hamiltonian(p))), 1e-6);
  }
}

TEST(Spectral, EigenvectorsSatisfyResidualBound) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ua(-1.0, 4.0);
  std::uniform_real_distribution<double> uk(-3.0, 3.0);
  for (int n = 0; n < 2000; ++n) {
    const ModelParams p{ua(rng), uk(rng), uk(rng)};
    if (std::abs(discriminant(p)) < 1e-3) continue;
    const Mat3 h = hamiltonian(p);
    const auto s = eigensolve(p, true);
    for (int i = 0; i < 3; ++i) {
      const Vec3& v = (*s.eigenvectors)[i];
      EXPECT_NEAR(v.norm(), 1.0, 1e-12);
      EXPECT_LE((h * v - s.eigenvalues[i] * v).norm(), 1e-8 * h.norm());
    }
  }
}

TEST(Spectral, ClosedFormVectorFallsBackWhenDegenerate) {
  // E = -c1 zeroes the middle entry; pick c with (c1+E)(c2+E) = 1 impossible
  // is hard to hit exactly, so test the fallback directly on a hand-made
  // coefficient set where the closed form is the zero vector up to scale.
  const PolyCoeffs c{cplx(1.0, 0.0), cplx(0.0, 0.0)};
  const Mat3 h = hamiltonian_from_coeffs(c);
  const auto s = eigensolve(h, false);
  for (const auto& e : s.eigenvalues) {
    const Vec3 v = family_eigenvector(c, e);
    EXPECT_LT((h * v - e * v).norm(), 1e-8 * h.norm());
  }
}

TEST(Spectral, MethodsEigenvalueGoldens) {
  const auto at = [](double theta) {
    return label_by_real_part(eigensolve(loop_point(kTrivialSection, theta)).eigenvalues);
  };
  const Triple g1{cplx(2.3, -0.9), cplx(0.5, 0.2), cplx(-1.2, -0.6)};
  const Triple g2{cplx(2.4, -1.0), cplx(0.2, -0.6), cplx(-1.0, 0.3)};
  const Triple e1 = at(11.0 * kPi / 8.0);
  const Triple e2 = at(13.0 * kPi / 8.0);
  // Goldens are rounded to one decimal, so each component is within 0.05.
  for (int i = 0; i < 3; ++i) {
    EXPECT_LE(std::abs(e1[i].real() - g1[i].real()), 0.05) << i;
    EXPECT_LE(std::abs(e1[i].imag() - g1[i].imag()), 0.05) << i;
    EXPECT_LE(std::abs(e2[i].real() - g2[i].real()), 0.05) << i;
    EXPECT_LE(std::abs(e2[i].imag() - g2[i].imag()), 0.05) << i;
  }
}

TEST(Spectral, BestMatchingRecoversPermutation) {
  const Triple a{cplx(1, 0), cplx(0, 1), cplx(-1, 0)};
  const Triple shuffled{a[2] + 0.01, a[0] - 0.01, a[1] + cplx(0, 0.01)};
  const auto perm = best_matching(a, shuffled);
  EXPECT_EQ(perm, (std::array<int, 3>{1, 2, 0}));
  const Triple back = apply_matching(shuffled, perm);
  for (int i = 0; i < 3; ++i) EXPECT_LT(std::abs(back[i] - a[i]), 0.02);
}

TEST(Spectral, LabelsDescendingRealThenImag) {
  const Triple e = label_by_real_part({cplx(0, 1), cplx(2, 0), cplx(0, 3)});
  EXPECT_EQ(e[0], cplx(2, 0));
  EXPECT_EQ(e[1], cplx(0, 3));
  EXPECT_EQ(e[2], cplx(0, 1));
}

TEST(TrackBands, TrivialSectionClosesOnItself) {
  const auto path = track_bands(kTrivialSection);
  EXPECT_EQ(path.closure_permutation(), (std::array<int, 3>{0, 1, 2}));
  EXPECT_DOUBLE_EQ(path.thetas.front(), 0.0);
  EXPECT_DOUBLE_EQ(path.thetas.back(), 2.0 * kPi);
}

TEST(TrackBands, TripleSectionIsThreeCycle) {
  const auto path = track_bands(kTripleSection);
  const auto c = path.closure_permutation();
  EXPECT_NE(c[0], 0);
  EXPECT_NE(c[1], 1);
  EXPECT_NE(c[2], 2);
  EXPECT_EQ(c[c[c[0]]], 0);
  // Multiset closure.
  EXPECT_LT(multiset_distance(path.at(0), path.at(path.size() - 1)), 1e-6);
}

TEST(TrackBands, StepGuaranteeHolds) {
  for (const auto& loop : {kTrivialSection, kTripleSection}) {
    const auto path = track_bands(loop);
    for (std::size_t j = 0; j + 1 < path.size(); ++j) {
      const Triple a = path.at(j), b = path.at(j + 1);
      double step = 0.0;
      for (int i = 0; i < 3; ++i) step = std::max(step, std::abs(a[i] - b[i]));
      EXPECT_LE(step, 0.5 * std::min(min_gap(a), min_gap(b)));
      EXPECT_EQ(best_matching(a, b), (std::array<int, 3>{0, 1, 2}));
    }
  }
}

TEST(TrackBands, SmallLoopWithoutEpIsNearlyConstant) {
  const auto path = track_bands({1.0, 0.1, {0.0, 0.0}});
  EXPECT_EQ(path.closure_permutation(), (std::array<int, 3>{0, 1, 2}));
  for (int i = 0; i < 3; ++i)
    for (const auto& e : path.bands[i]) EXPECT_LT(std::abs(e - path.bands[i][0]), 0.5);
}

TEST(TrackBands, IndependentOfSamplingDensity) {
  for (const auto& loop : {kTrivialSection, kTripleSection}) {
    const auto ref = track_bands(loop, 256);
    for (int n : {32, 64}) {
      const auto path = track_bands(loop, n);
      // Compare at the coarse grid points shared by both.
      for (std::size_t j = 0; j < path.size(); ++j) {
        const double t = path.thetas[j];
        const auto it = std::find_if(ref.thetas.begin(), ref.thetas.end(),
                                     [&](double x) { return std::abs(x - t) < 1e-12; });
        if (it == ref.thetas.end()) continue;
        const auto k = static_cast<std::size_t>(it - ref.thetas.begin());
        for (int i = 0; i < 3; ++i) EXPECT_LT(std::abs(path.bands[i][j] - ref.bands[i][k]), 1e-6);
      }
    }
  }
}

TEST(TrackBands, RejectsLoopThroughCubicPoint) {
  try {
    track_bands({3.0, 1.0, {-1.0, 0.0}});
    FAIL() << "expected EPOnLoop";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EPOnLoop);
  }
}

TEST(TrackBands, RejectsBadArguments) {
  EXPECT_THROW(track_bands({0.39, 0.0, {0.0, 0.0}}), Error);
  EXPECT_THROW(track_bands(kTrivialSection, 2), Error);
}

TEST(RelativePhases, TrivialSectionOnlyMiddlePairCrosses) {
  const auto ph = relative_phases(track_bands(kTrivialSection));
  auto count_crossings = [](const std::vector<double>& s) {
    int n = 0;
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
      // Crossing +-pi/2 mod 2pi means cos changes sign.
      if ((std::cos(s[k]) < 0) != (std::cos(s[k + 1]) < 0)) ++n;
    }
    return n;
  };
  EXPECT_EQ(count_crossings(ph.series[0]), 0);
  EXPECT_EQ(count_crossings(ph.series[1]), 2);
  EXPECT_EQ(count_crossings(ph.series[2]), 0);
}

TEST(RelativePhases, SwappedPairDiffersByPi) {
  const auto path = track_bands(kTripleSection);
  const auto ph = relative_phases(path);
  for (std::size_t k = 0; k < path.size(); ++k) {
    const double swapped = -std::arg(path.bands[1][k] - path.bands[0][k]);
    const double d = std::remainder(swapped - ph.series[0][k] - kPi, 2.0 * kPi);
    EXPECT_NEAR(d, 0.0, 1e-12);
  }
}

TEST(RelativePhases, UnwrappedStepsAreSmall) {
  const auto ph = relative_phases(track_bands(kTripleSection));
  for (const auto& s : ph.series)
    for (std::size_t k = 0; k + 1 < s.size(); ++k) EXPECT_LT(std::abs(s[k + 1] - s[k]), kPi / 2);
}

TEST(RelativePhases, ClosureUpToRelabeling) {
  const auto path = track_bands(kTrivialSection);
  const auto ph = relative_phases(path);
  for (const auto& s : ph.series)
    EXPECT_NEAR(std::remainder(s.back() - s.front(), 2.0 * kPi), 0.0, 1e-9);
}

TEST(Crossings, TripleSectionHasFourCrossingsInOrder) {
  const auto ev = detect_crossings(track_bands(kTripleSection));
  ASSERT_EQ(ev.size(), 4u);
  const std::vector<std::pair<int, int>> expected{{1, 2}, {1, 3}, {3, 2}, {1, 2}};
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(ev[k].i, expected[k].first) << k;
    EXPECT_EQ(ev[k].j, expected[k].second) << k;
  }
  for (std::size_t k = 0; k + 1 < ev.size(); ++k) EXPECT_LT(ev[k].theta, ev[k + 1].theta);
}

TEST(Crossings, EventsSatisfyDefiningConvention) {
  for (const auto& loop : {kTrivialSection, kTripleSection}) {
    const auto path = track_bands(loop);
    for (const auto& ev : detect_crossings(path)) {
      // Continue the bands from the nearest sample to the event angle.
      std::size_t k = 0;
      while (k + 1 < path.size() && path.thetas[k + 1] <= ev.theta) ++k;
      const Triple raw = eigensolve(loop_point(loop, ev.theta)).eigenvalues;
      const Triple e = apply_matching(raw, best_matching(path.at(k), raw));
      EXPECT_LT(std::abs((e[ev.i - 1] - e[ev.j - 1]).real()), 1e-8);
      EXPECT_LT(e[ev.i - 1].imag(), e[ev.j - 1].imag());
    }
  }
}

TEST(Crossings, TrivialSectionHasTwoCrossingsOfMiddlePair) {
  const auto ev = detect_crossings(track_bands(kTrivialSection));
  ASSERT_EQ(ev.size(), 2u);
  for (const auto& e : ev) {
    EXPECT_EQ(std::min(e.i, e.j), 2);
    EXPECT_EQ(std::max(e.i, e.j), 3);
  }
}

TEST(Crossings, NoCrossingsOnQuietLoop) {
  EXPECT_TRUE(detect_crossings(track_bands({1.0, 0.1, {0.0, 0.0}})).empty());
}

TEST(Crossings, PairCountParityWhenClosureFixesPair) {
  for (double a : {0.0, 0.39, 0.73, 1.5, 2.5}) {
    const auto path = track_bands({a, 1.4, {0.0, 0.0}});
    const auto closure = path.closure_permutation();
    const auto ev = detect_crossings(path);
    for (int i = 1; i <= 3; ++i)
      for (int j = i + 1; j <= 3; ++j) {
        if (closure[i - 1] != i - 1 || closure[j - 1] != j - 1) continue;
        int n = 0;
        for (const auto& e : ev)
          if (std::min(e.i, e.j) == i && std::max(e.i, e.j) == j) ++n;
        EXPECT_EQ(n % 2, 0) << "alpha=" << a << " pair " << i << j;
      }
  }
}
