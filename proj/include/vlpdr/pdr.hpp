#pragma once

// Step-and-heading pedestrian dead reckoning.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "vlpdr/error.hpp"

namespace vlpdr {

/// East/north position in meters.
template <typename Scalar>
using Pose2 = Eigen::Matrix<Scalar, 2, 1>;
using Pose2D = Pose2<double>;

struct ImuSample {
  double t = 0.0;                                    // s
  Eigen::Vector3d accel = Eigen::Vector3d::Zero();  // specific force, m/s^2, device frame
  Eigen::Vector3d mag = Eigen::Vector3d::Zero();    // uT, device frame
};

struct StepEvent {
  double t = 0.0;
  double a_zmax = 0.0;
  double a_zmin = 0.0;
  /// Reciprocal of the interval to the previous event; 0 for the first step.
  double step_freq = 0.0;
  std::size_t sample_index = 0;
};

/// Clockwise from north, in [0, 2*pi).
struct HeadingEstimate {
  double alpha = 0.0;
};

template <typename Scalar>
Scalar normalize_heading(Scalar a) {
  constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  a = std::fmod(a, two_pi);
  return a < Scalar(0) ? a + two_pi : a;
}

/// Wraps an angle difference into (-pi, pi].
template <typename Scalar>
Scalar wrap_pi(Scalar a) {
  constexpr Scalar pi = std::numbers::pi_v<Scalar>;
  a = std::fmod(a + pi, Scalar(2) * pi);
  if (a <= Scalar(0)) a += Scalar(2) * pi;
  return a - pi;
}

/// Weinberg model: k1 * (a_zmax^2 - a_zmin^2)^(1/4).
template <typename Scalar>
Scalar weinberg_length(Scalar a_zmax, Scalar a_zmin, Scalar k1) {
  if (a_zmax < a_zmin) throw ContractViolation("a_zmax must not be below a_zmin");
  return k1 * std::sqrt(std::sqrt(a_zmax * a_zmax - a_zmin * a_zmin));
}

inline double weinberg_length(const StepEvent& step, double k1) {
  return weinberg_length(step.a_zmax, step.a_zmin, k1);
}

/// Fourth-root acceleration term shared by the Weinberg model and its inverse.
inline double weinberg_root(const StepEvent& step) { return weinberg_length(step, 1.0); }

/// Frequency/stature model: k2 * f * s.
template <typename Scalar>
Scalar freq_stature_length(Scalar f, Scalar stature, Scalar k2) {
  if (!(f > Scalar(0)) || !(stature > Scalar(0)) || !(k2 > Scalar(0))) {
    throw ContractViolation("step frequency, stature and k2 must be positive");
  }
  return k2 * f * stature;
}

/// X_n = X_{n-1} + l sin(alpha), Y_n = Y_{n-1} + l cos(alpha).
template <typename Scalar>
Pose2<Scalar> dead_reckon(const Pose2<Scalar>& pose, Scalar length, Scalar alpha) {
  return pose + length * Pose2<Scalar>(std::sin(alpha), std::cos(alpha));
}

inline Pose2D dead_reckon(const Pose2D& pose, double length, HeadingEstimate heading) {
  return dead_reckon<double>(pose, length, heading.alpha);
}

struct WeinbergModel {
  double k1 = 0.5;
};

struct FrequencyStatureModel {
  double k2 = 0.4;
  double stature = 1.75;
};

using StepLengthModel = std::variant<WeinbergModel, FrequencyStatureModel>;

double step_length(const StepLengthModel& model, const StepEvent& step);

struct StepDetectorParams {
  double smooth_window = 0.25;      // s, centered moving average
  double peak_threshold = 1.0;      // m/s^2 above the gravity baseline
  double min_step_interval = 0.3;   // s
  double gravity_window = 2.0;      // s, gravity direction and baseline
};

/// Vertical (gravity-aligned) specific force, smoothed as the detector sees it.
std::vector<double> vertical_signal(std::span<const ImuSample> samples, const StepDetectorParams& params = {});

/// Peak detection on the smoothed vertical acceleration. A higher peak inside
/// the refractory interval replaces the pending event instead of being dropped.
std::vector<StepEvent> detect_steps(std::span<const ImuSample> samples, const StepDetectorParams& params = {});

/// Tilt-compensated magnetic heading of the averaged window.
HeadingEstimate estimate_heading(std::span<const ImuSample> window);

}  // namespace vlpdr
