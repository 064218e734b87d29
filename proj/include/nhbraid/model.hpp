#pragma once

// Three-band non-Hermitian family
//   H = sqrt2 [ (i(a+1)/4 - k1) Sz - Sx ] + (i k2 - [1 - (a-2)^2]) diag(0,1,0)
// with spin-1 Sx, Sz. In the standard basis this is
//   [[ c1, -1,   0 ],
//    [ -1, -c2, -1 ],
//    [  0, -1, -c1 ]]
// where c1 = sqrt2 (i(a+1)/4 - k1), c2 = -i k2 + 1 - (a-2)^2.

#include <array>
#include <cmath>
#include <utility>

#include "nhbraid/types.hpp"

namespace nhbraid {

struct ModelParams {
  double alpha = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;

  bool finite() const { return std::isfinite(alpha) && std::isfinite(k1) && std::isfinite(k2); }
};

struct PolyCoeffs {
  cplx c1;
  cplx c2;
};

/// Counter-clockwise circle in the (k1, k2) plane at fixed alpha.
struct Loop {
  double alpha = 0.0;
  double radius = 1.0;
  std::array<double, 2> center{0.0, 0.0};
};

inline PolyCoeffs poly_coeffs(const ModelParams& p) {
  const double s2 = std::sqrt(2.0);
  const cplx c1 = s2 * cplx(-p.k1, (p.alpha + 1.0) / 4.0);
  const cplx c2(1.0 - (p.alpha - 2.0) * (p.alpha - 2.0), -p.k2);
  return {c1, c2};
}

/// Hamiltonian assembled from c1, c2 (the family depends on nothing else).
inline Mat3 hamiltonian_from_coeffs(const PolyCoeffs& c) {
  Mat3 h;
  h << c.c1, -1.0, 0.0,
       -1.0, -c.c2, -1.0,
       0.0, -1.0, -c.c1;
  return h;
}

inline Mat3 hamiltonian(const ModelParams& p) { return hamiltonian_from_coeffs(poly_coeffs(p)); }

/// Monic cubic E^3 + b E^2 + c E + d.
struct Cubic {
  cplx b, c, d;

  cplx operator()(cplx e) const { return ((e + b) * e + c) * e + d; }
  cplx derivative(cplx e) const { return (3.0 * e + 2.0 * b) * e + c; }
};

/// Characteristic polynomial det(E - H) of an arbitrary 3x3 matrix.
inline Cubic characteristic_polynomial(const Mat3& h) {
  const cplx tr = h.trace();
  const cplx minors = h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0) + h(0, 0) * h(2, 2) -
                      h(0, 2) * h(2, 0) + h(1, 1) * h(2, 2) - h(1, 2) * h(2, 1);
  return {-tr, minors, -h.determinant()};
}

/// P(E) = E^3 + c2 E^2 + (-c1^2 - 2) E - c1^2 c2.
inline Cubic characteristic_polynomial(const PolyCoeffs& c) {
  const cplx s = c.c1 * c.c1;
  return {c.c2, -s - 2.0, -s * c.c2};
}

/// prod_{i<j} (E_i - E_j)^2 of a monic cubic.
inline cplx cubic_discriminant(const Cubic& p) {
  const cplx& b = p.b;
  const cplx& c = p.c;
  const cplx& d = p.d;
  return b * b * c * c - 4.0 * c * c * c - 4.0 * b * b * b * d - 27.0 * d * d + 18.0 * b * c * d;
}

namespace detail {

// Discriminant as a polynomial in s = c1^2 and b = c2, with its partials.
struct DiscTerms {
  cplx value, d_s, d_b;
};

inline DiscTerms disc_terms(cplx s, cplx b) {
  const cplx u = s + 2.0;
  const cplx b2 = b * b;
  const cplx value = b2 * u * u + 4.0 * u * u * u + 4.0 * b2 * b2 * s - 27.0 * s * s * b2 +
                     18.0 * b2 * s * u;
  const cplx d_s = 2.0 * b2 * u + 12.0 * u * u + 4.0 * b2 * b2 - 54.0 * s * b2 +
                   18.0 * b2 * (2.0 * s + 2.0);
  const cplx d_b = 2.0 * b * u * u + 16.0 * b2 * b * s - 54.0 * s * s * b + 36.0 * b * s * u;
  return {value, d_s, d_b};
}

}  // namespace detail

inline cplx discriminant(const ModelParams& p) {
  const auto c = poly_coeffs(p);
  return detail::disc_terms(c.c1 * c.c1, c.c2).value;
}

/// Discriminant together with its partial derivatives in alpha, k1 and k2.
struct DiscriminantJet {
  cplx value;
  cplx d_alpha;
  cplx d_k1;
  cplx d_k2;
};

inline DiscriminantJet discriminant_jet(const ModelParams& p) {
  const auto c = poly_coeffs(p);
  const auto t = detail::disc_terms(c.c1 * c.c1, c.c2);
  const double s2 = std::sqrt(2.0);
  const cplx ds_dk1 = 2.0 * c.c1 * (-s2);
  const cplx ds_dalpha = 2.0 * c.c1 * cplx(0.0, s2 / 4.0);
  const cplx db_dk2(0.0, -1.0);
  const cplx db_dalpha = -2.0 * (p.alpha - 2.0);
  return {t.value, t.d_s * ds_dalpha + t.d_b * db_dalpha, t.d_s * ds_dk1, t.d_b * db_dk2};
}

inline ModelParams loop_point(const Loop& loop, double theta) {
  return {loop.alpha, loop.center[0] + loop.radius * std::cos(theta),
          loop.center[1] + loop.radius * std::sin(theta)};
}

}  // namespace nhbraid
