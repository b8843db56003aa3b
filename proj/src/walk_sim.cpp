#include "vlpdr/walk_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <set>

namespace vlpdr {

namespace {

constexpr double kGravity = 9.80665;

double heading_of(const Pose2D& d) { return normalize_heading(std::atan2(d.x(), d.y())); }

std::size_t segment_count(const RouteSpec& r) {
  return r.closed ? r.waypoints.size() : r.waypoints.size() - 1;
}

struct StepPlan {
  std::vector<Pose2D> to;
  std::vector<double> length;
  std::vector<double> alpha;
  std::vector<long> samples;  // duration of each step in samples
  std::vector<std::size_t> lap_end;
};

StepPlan plan_steps(const SimScenario& sc, std::mt19937_64& rng) {
  StepPlan plan;
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  const auto& wp = sc.route.waypoints;
  const std::size_t nseg = segment_count(sc.route);
  const long min_samples = static_cast<long>(std::ceil(sc.detector.min_step_interval * sc.sample_rate)) + 2;

  for (int lap = 0; lap < sc.route.laps; ++lap) {
    for (std::size_t s = 0; s < nseg; ++s) {
      const Pose2D a = wp[s];
      const Pose2D b = wp[(s + 1) % wp.size()];
      const double seg = (b - a).norm();
      const double speed = sc.gait.speed * (1.0 + sc.noise.speed_jitter * jitter(rng));
      // Longer strides at higher cadence-independent speed, half as sensitive.
      const double nominal = sc.gait.true_step_length * (1.0 + 0.5 * (speed / sc.gait.speed - 1.0));
      const auto n = std::max<long>(1, std::lround(seg / nominal));
      const double len = seg / static_cast<double>(n);
      const long dur = std::max(min_samples, std::lround(len / speed * sc.sample_rate));
      const double alpha = heading_of(b - a);
      for (long k = 1; k <= n; ++k) {
        plan.to.push_back(a + (b - a) * (static_cast<double>(k) / static_cast<double>(n)));
        plan.length.push_back(len);
        plan.alpha.push_back(alpha);
        plan.samples.push_back(dur);
      }
    }
    plan.lap_end.push_back(plan.to.size() - 1);
  }
  return plan;
}

/// Vertical specific force built from half-cosine segments: each step falls
/// from the previous peak to its trough and rises to its own peak, which is
/// reached exactly at the step instant.
std::vector<double> vertical_profile(const std::vector<long>& durations, const std::vector<double>& amp, long stand) {
  std::vector<double> v;
  v.assign(static_cast<std::size_t>(stand) + 1, kGravity);
  double prev_peak = kGravity;
  for (std::size_t n = 0; n < durations.size(); ++n) {
    const long dur = durations[n];
    const double trough = kGravity - amp[n], peak = kGravity + amp[n];
    const long half = dur / 2;
    for (long i = 1; i <= dur; ++i) {
      if (i <= half) {
        const double w = static_cast<double>(i) / static_cast<double>(half);
        v.push_back(trough + (prev_peak - trough) * 0.5 * (1.0 + std::cos(std::numbers::pi * w)));
      } else {
        const double w = static_cast<double>(i - half) / static_cast<double>(dur - half);
        v.push_back(trough + (peak - trough) * 0.5 * (1.0 - std::cos(std::numbers::pi * w)));
      }
    }
    prev_peak = peak;
  }
  const long settle = durations.empty() ? 0 : durations.back() / 2;
  for (long i = 1; i <= settle; ++i) {
    const double w = static_cast<double>(i) / static_cast<double>(settle);
    v.push_back(kGravity + (prev_peak - kGravity) * 0.5 * (1.0 + std::cos(std::numbers::pi * w)));
  }
  v.insert(v.end(), static_cast<std::size_t>(stand), kGravity);
  return v;
}

std::vector<ImuSample> clean_imu(const std::vector<double>& v, double fs) {
  std::vector<ImuSample> imu(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    imu[i].t = static_cast<double>(i) / fs;
    imu[i].accel = Eigen::Vector3d(0, 0, v[i]);
  }
  return imu;
}

/// Finds per-step amplitudes whose detected extremes reproduce the target
/// fourth-power terms (L / k1)^4 through the default detector.
std::vector<double> fit_amplitudes(const SimScenario& sc, const StepPlan& plan, long stand) {
  const std::size_t n = plan.length.size();
  std::vector<double> target(n), amp(n);
  for (std::size_t i = 0; i < n; ++i) {
    target[i] = std::pow(plan.length[i] / sc.oracle_k1, 4);
    amp[i] = target[i] / (4.0 * kGravity) / 0.6;
  }
  for (int iter = 0; iter < 200; ++iter) {
    const auto imu = clean_imu(vertical_profile(plan.samples, amp, stand), sc.sample_rate);
    const auto events = detect_steps(imu, sc.detector);
    if (events.size() != n) {
      throw ScenarioError("gait cannot be resolved by the step detector (" + std::to_string(events.size()) +
                          " of " + std::to_string(n) + " steps)");
    }
    double worst = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double q = events[i].a_zmax * events[i].a_zmax - events[i].a_zmin * events[i].a_zmin;
      if (!(q > 0)) throw ScenarioError("degenerate step waveform");
      const double ratio = target[i] / q;
      worst = std::max(worst, std::abs(ratio - 1.0));
      amp[i] *= ratio;
    }
    if (worst < 1e-14) break;
  }
  return amp;
}

Pose2D unit(double alpha) { return {std::sin(alpha), std::cos(alpha)}; }

}  // namespace

RouteSpec RouteSpec::rectangle(double width, double height, int laps) {
  RouteSpec r;
  r.waypoints = {Pose2D(0, 0), Pose2D(width, 0), Pose2D(width, height), Pose2D(0, height)};
  r.closed = true;
  r.laps = laps;
  return r;
}

double RouteSpec::lap_length() const {
  double s = 0;
  for (std::size_t i = 0; i < segment_count(*this); ++i) {
    s += (waypoints[(i + 1) % waypoints.size()] - waypoints[i]).norm();
  }
  return s;
}

Pose2D RouteSpec::point_at(double s) const {
  const double total = lap_length();
  if (closed) s = std::fmod(std::fmod(s, total) + total, total);
  for (std::size_t i = 0; i < segment_count(*this); ++i) {
    const Pose2D a = waypoints[i], b = waypoints[(i + 1) % waypoints.size()];
    const double len = (b - a).norm();
    if (s <= len) return a + (b - a) * (s / len);
    s -= len;
  }
  return closed ? waypoints.front() : waypoints.back();
}

void RouteSpec::validate() const {
  if (waypoints.size() < 2) throw ScenarioError("route needs at least two waypoints");
  if (laps < 1) throw ScenarioError("route needs at least one lap");
  if (laps > 1 && !closed) throw ScenarioError("an open route cannot be walked for several laps");
  for (std::size_t i = 0; i < segment_count(*this); ++i) {
    if ((waypoints[(i + 1) % waypoints.size()] - waypoints[i]).norm() < 1e-9) {
      throw ScenarioError("route has a zero-length segment");
    }
  }
}

GaitProfile GaitProfile::from_speed(double speed) {
  GaitProfile g;
  g.speed = speed;
  g.true_step_length = std::clamp(0.55 + 0.1875 * (speed - 0.9), 0.45, 0.8);
  g.step_freq = speed / g.true_step_length;
  return g;
}

void GaitProfile::validate() const {
  if (!(speed > 0) || !(true_step_length > 0) || !(step_freq > 0)) {
    throw ScenarioError("gait speed, step length and frequency must be positive");
  }
  if (std::abs(speed - true_step_length * step_freq) > 1e-6 * speed) {
    throw ScenarioError("gait speed must equal step length times step frequency");
  }
}

void SimScenario::validate() const {
  route.validate();
  gait.validate();
  camera.validate();
  for (const auto& f : fixtures) f.validate();
  if (!(oracle_k1 > 0)) throw ScenarioError("oracle k1 must be positive");
  if (!(sample_rate > 0)) throw ScenarioError("sample rate must be positive");
  if (stand_time < 0 || arm_length < 0) throw ScenarioError("stand time and arm length must be non-negative");
  if (noise.imu_sigma < 0 || noise.mag_sigma < 0 || noise.pixel_sigma < 0 || noise.speed_jitter < 0 ||
      noise.speed_jitter >= 0.5) {
    throw ScenarioError("noise levels out of range");
  }
}

Pose2D TruthTimeline::body(double t) const {
  if (step_end.empty() || t <= step_start.front()) return start;
  if (t >= step_end.back()) return to.back();
  const auto it = std::lower_bound(step_end.begin(), step_end.end(), t);
  const auto n = static_cast<std::size_t>(it - step_end.begin());
  const double u = (t - step_start[n]) / (step_end[n] - step_start[n]);
  return from[n] + (to[n] - from[n]) * u;
}

Pose2D TruthTimeline::phone(double t) const {
  if (step_end.empty()) return start;
  double alpha;
  if (t <= step_start.front()) {
    alpha = alpha_from.front();
  } else if (t >= step_end.back()) {
    alpha = alpha_to.back();
  } else {
    const auto n = static_cast<std::size_t>(std::lower_bound(step_end.begin(), step_end.end(), t) - step_end.begin());
    const double u = (t - step_start[n]) / (step_end[n] - step_start[n]);
    alpha = alpha_from[n] + wrap_pi(alpha_to[n] - alpha_from[n]) * u;
  }
  return body(t) + arm_length * unit(alpha);
}

std::pair<SensorLog, GroundTruth> synth_walk(const SimScenario& sc) {
  sc.validate();
  std::mt19937_64 rng(sc.seed);
  const StepPlan plan = plan_steps(sc, rng);
  const long stand = std::lround(sc.stand_time * sc.sample_rate);
  const auto amp = fit_amplitudes(sc, plan, stand);
  const auto v = vertical_profile(plan.samples, amp, stand);
  const double fs = sc.sample_rate;
  const std::size_t nsteps = plan.length.size();

  GroundTruth truth;
  truth.start = sc.route.waypoints.front();
  truth.step_positions = plan.to;
  truth.step_lengths = plan.length;
  truth.headings = plan.alpha;
  truth.lap_end_steps = plan.lap_end;

  TruthTimeline tl;
  tl.start = truth.start;
  tl.arm_length = sc.arm_length;
  tl.stand_time = sc.stand_time;
  std::vector<long> step_end_sample(nsteps);
  long cursor = stand;
  for (std::size_t n = 0; n < nsteps; ++n) {
    tl.step_start.push_back(static_cast<double>(cursor) / fs);
    cursor += plan.samples[n];
    step_end_sample[n] = cursor;
    tl.step_end.push_back(static_cast<double>(cursor) / fs);
    tl.from.push_back(n == 0 ? truth.start : plan.to[n - 1]);
    tl.to.push_back(plan.to[n]);
    tl.alpha_from.push_back(n == 0 ? plan.alpha[0] : plan.alpha[n - 1]);
    tl.alpha_to.push_back(plan.alpha[n]);
    truth.step_times.push_back(tl.step_end.back());
    truth.weinberg_roots.push_back(plan.length[n] / sc.oracle_k1);
  }

  truth.timeline = tl;

  SensorLog log;
  log.imu.resize(v.size());
  std::normal_distribution<double> unit_noise(0.0, 1.0);
  std::size_t step = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    while (step + 1 < nsteps && static_cast<long>(i) > step_end_sample[step]) ++step;
    const double alpha = nsteps ? plan.alpha[step] : 0.0;
    const double rel = sc.noise.heading_bias - alpha;
    auto& s = log.imu[i];
    s.t = static_cast<double>(i) / fs;
    s.accel = Eigen::Vector3d(0, 0, v[i]);
    s.mag = Eigen::Vector3d(sc.field_horizontal * std::sin(rel), sc.field_horizontal * std::cos(rel),
                            -sc.field_vertical) +
            sc.noise.hard_iron;
    for (int k = 0; k < 3; ++k) {
      s.accel[k] += sc.noise.imu_sigma * unit_noise(rng);
      s.mag[k] += sc.noise.mag_sigma * unit_noise(rng);
    }
  }

  if (!sc.fixtures.empty()) {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const auto stream_len = static_cast<double>(sc.schema.stream_len());
    std::vector<Bits> streams;
    std::vector<double> offsets;
    for (const auto& f : sc.fixtures) {
      streams.push_back(encode_id(f.id, sc.schema));
      offsets.push_back(std::floor(u01(rng) * stream_len));
    }
    const double period = 1.0 / sc.camera.frame_rate;
    const double t_end = log.imu.back().t;
    for (double t = u01(rng) * period; t <= t_end; t += period) {
      const Pose2D phone = tl.phone(t);
      std::optional<std::size_t> best;
      RoiObservation best_roi;
      double best_d = 0;
      for (std::size_t k = 0; k < sc.fixtures.size(); ++k) {
        const auto roi = project_roi(sc.camera, sc.fixtures[k], phone);
        if (!roi.valid) continue;
        const double d = (roi.center_px - sc.camera.image_center()).norm();
        if (!best || d < best_d) {
          best = k;
          best_roi = roi;
          best_d = d;
        }
      }
      if (!best) continue;
      RenderNoise noise;
      noise.pixel_sigma = sc.noise.pixel_sigma;
      noise.seed = rng();
      FrameRecord rec;
      rec.image = render_frame(sc.camera, sc.fixtures[*best], streams[*best],
                               stream_phase(sc.fixtures[*best], t, offsets[*best]), best_roi, noise);
      rec.image.timestamp = t;
      rec.fixture_index = *best;
      rec.phone_xy = phone;
      log.frames.push_back(std::move(rec));
    }
  }
  return {std::move(log), std::move(truth)};
}

std::vector<LedFixture> reference_fixtures(const RouteSpec& route, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const PacketSchema schema;
  std::uniform_int_distribution<std::uint32_t> id_dist(0, (1u << schema.id_len()) - 1);
  std::set<std::uint32_t> used;
  std::vector<LedFixture> out;
  const double lap = route.lap_length();
  for (double frac : {1.0 / 12.0, 5.0 / 12.0, 9.0 / 12.0}) {
    LedId id;
    for (;;) {
      const std::uint32_t v = id_dist(rng);
      Bits bits(schema.id_len());
      for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = (v >> (bits.size() - 1 - i)) & 1u;
      id = LedId(std::move(bits));
      if (rotation_unique(id, schema) && used.insert(v).second) break;
    }
    LedFixture f;
    f.id = id;
    f.world_xy = route.point_at(frac * lap);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<SimScenario> make_reference_scenarios(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::vector<SimScenario> out;
  for (int i = 0; i < 30; ++i) {
    SimScenario sc;
    sc.name = "ref" + std::to_string(i);
    sc.route = RouteSpec::rectangle(12.0, 6.0, 3);
    const double speed = (i % 2 == 0) ? 0.9 + 0.3 * u01(rng) : 1.4 + 0.3 * u01(rng);
    sc.gait = GaitProfile::from_speed(speed);
    sc.fixtures = reference_fixtures(sc.route, rng());
    sc.noise.imu_sigma = 0.15;
    sc.noise.mag_sigma = 0.3;
    sc.noise.pixel_sigma = 0.02;
    sc.noise.speed_jitter = 0.04;
    const double hi = 1.5 + 1.5 * u01(rng);
    const double dir = 2.0 * std::numbers::pi * u01(rng);
    sc.noise.hard_iron = Eigen::Vector3d(hi * std::cos(dir), hi * std::sin(dir), 0.0);
    sc.arm_length = 0.2;
    sc.seed = rng();
    out.push_back(std::move(sc));
  }
  return out;
}

}  // namespace vlpdr
