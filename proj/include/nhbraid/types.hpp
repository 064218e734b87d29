#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace nhbraid {

using cplx = std::complex<double>;
using Mat3 = Eigen::Matrix3cd;
using Vec3 = Eigen::Vector3cd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr cplx kI{0.0, 1.0};

/// Failure categories surfaced by the numerical pipelines.
enum class ErrorKind {
  InvalidArgument,
  EPOnLoop,
  DegenerateBands,
  TangentialCrossing,
  NonAdjacentCrossing,
  Inconclusive,
  PhaseStepTooLarge,
  NonIntegerWinding,
  NotAnEp,
  ContinuationStalled,
  OutOfRange,
  MetricDegenerate,
  Degenerate,
  Ambiguous,
  RankDeficient,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::EPOnLoop: return "EPOnLoop";
    case ErrorKind::DegenerateBands: return "DegenerateBands";
    case ErrorKind::TangentialCrossing: return "TangentialCrossing";
    case ErrorKind::NonAdjacentCrossing: return "NonAdjacentCrossing";
    case ErrorKind::Inconclusive: return "Inconclusive";
    case ErrorKind::PhaseStepTooLarge: return "PhaseStepTooLarge";
    case ErrorKind::NonIntegerWinding: return "NonIntegerWinding";
    case ErrorKind::NotAnEp: return "NotAnEp";
    case ErrorKind::ContinuationStalled: return "ContinuationStalled";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::MetricDegenerate: return "MetricDegenerate";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::Ambiguous: return "Ambiguous";
    case ErrorKind::RankDeficient: return "RankDeficient";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace nhbraid
