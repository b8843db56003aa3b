#include "vlpdr/pdr.hpp"

#include <algorithm>

#include <Eigen/Geometry>

namespace vlpdr {

namespace {

std::size_t samples_for(double seconds, double dt) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(seconds / dt)));
}

template <typename T>
std::vector<T> centered_mean(const std::vector<T>& x, std::size_t window) {
  const std::size_t n = x.size();
  const std::size_t half = window / 2;
  T zero;
  if constexpr (std::is_arithmetic_v<T>) {
    zero = T(0);
  } else {
    zero = T::Zero();
  }
  std::vector<T> prefix(n + 1, zero);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<T> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

struct Vertical {
  std::vector<double> smooth;
  std::vector<double> baseline;
};

Vertical vertical_components(std::span<const ImuSample> samples, const StepDetectorParams& params) {
  if (samples.size() < 2) throw ContractViolation("step detection needs at least two samples");
  const double dt = (samples.back().t - samples.front().t) / static_cast<double>(samples.size() - 1);
  if (!(dt > 0)) throw ContractViolation("timestamps must be strictly increasing");

  std::vector<Eigen::Vector3d> acc(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) acc[i] = samples[i].accel;
  const auto long_window = samples_for(params.gravity_window, dt);
  const auto gravity = centered_mean(acc, long_window);

  std::vector<double> v(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double norm = gravity[i].norm();
    v[i] = norm > 0 ? acc[i].dot(gravity[i]) / norm : acc[i].z();
  }
  Vertical out;
  out.baseline = centered_mean(v, long_window);
  out.smooth = centered_mean(v, samples_for(params.smooth_window, dt));
  return out;
}

}  // namespace

double step_length(const StepLengthModel& model, const StepEvent& step) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, WeinbergModel>) {
          return weinberg_length(step, m.k1);
        } else {
          return freq_stature_length(step.step_freq, m.stature, m.k2);
        }
      },
      model);
}

std::vector<double> vertical_signal(std::span<const ImuSample> samples, const StepDetectorParams& params) {
  return vertical_components(samples, params).smooth;
}

constexpr double kFlatTolerance = 1e-9;  // m/s^2

std::vector<StepEvent> detect_steps(std::span<const ImuSample> samples, const StepDetectorParams& params) {
  const auto [s, baseline] = vertical_components(samples, params);

  std::vector<std::size_t> peaks;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    // Rounding in the moving average leaves ripples of ~1e-15 on flat
    // stretches; those are not maxima.
    if (!(s[i] >= s[i - 1] && s[i] > s[i + 1] + kFlatTolerance)) continue;
    if (s[i] - baseline[i] <= params.peak_threshold) continue;
    if (!peaks.empty() && samples[i].t - samples[peaks.back()].t < params.min_step_interval) {
      if (s[i] > s[peaks.back()]) peaks.back() = i;
      continue;
    }
    peaks.push_back(i);
  }

  std::vector<StepEvent> events;
  events.reserve(peaks.size());
  std::size_t cycle_start = 0;
  for (std::size_t j = 0; j < peaks.size(); ++j) {
    const std::size_t p = peaks[j];
    StepEvent e;
    e.t = samples[p].t;
    e.sample_index = p;
    e.a_zmax = s[p];
    e.a_zmin = *std::min_element(s.begin() + static_cast<std::ptrdiff_t>(cycle_start),
                                 s.begin() + static_cast<std::ptrdiff_t>(p) + 1);
    e.step_freq = j == 0 ? 0.0 : 1.0 / (e.t - events.back().t);
    events.push_back(e);
    cycle_start = p + 1;
  }
  return events;
}

HeadingEstimate estimate_heading(std::span<const ImuSample> window) {
  if (window.empty()) throw ContractViolation("heading window is empty");
  Eigen::Vector3d g = Eigen::Vector3d::Zero(), m = Eigen::Vector3d::Zero();
  for (const auto& s : window) {
    g += s.accel;
    m += s.mag;
  }
  if (g.norm() < 1e-9) throw DegenerateField("gravity vector is zero");
  const Eigen::Vector3d up = g.normalized();
  const Eigen::Vector3d m_h = m - m.dot(up) * up;
  if (m_h.norm() < 1e-6 * static_cast<double>(window.size())) {
    throw DegenerateField("horizontal magnetic field is too weak for a heading");
  }
  const Eigen::Vector3d north = m_h.normalized();
  const Eigen::Vector3d east = north.cross(up);
  const Eigen::Vector3d forward = Eigen::Vector3d::UnitY() - up.y() * up;
  return {normalize_heading(std::atan2(forward.dot(east), forward.dot(north)))};
}

}  // namespace vlpdr
