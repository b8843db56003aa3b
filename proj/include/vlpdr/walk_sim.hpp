#pragma once

// Synthetic pedestrian walks with a consistent sensor suite: 250 sps IMU whose
// vertical acceleration inverts the Weinberg model under an oracle k1, a
// magnetometer encoding the true heading, and rolling-shutter frames whenever
// a luminaire is in view.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "vlpdr/occ_codec.hpp"
#include "vlpdr/pdr.hpp"
#include "vlpdr/rolling_shutter.hpp"

namespace vlpdr {

struct RouteSpec {
  std::vector<Pose2D> waypoints;
  bool closed = true;
  int laps = 1;

  /// Axis-aligned rectangle starting at the origin, walked east then north.
  static RouteSpec rectangle(double width = 12.0, double height = 6.0, int laps = 3);

  double lap_length() const;
  /// Point at arc length `s` along one lap (wraps for closed routes).
  Pose2D point_at(double s) const;
  void validate() const;
};

struct GaitProfile {
  double speed = 1.2;              // m/s
  double true_step_length = 0.6;   // m
  double step_freq = 2.0;          // Hz

  /// Speed-dependent step length law used by the reference scenarios.
  static GaitProfile from_speed(double speed);
  void validate() const;
};

struct NoiseLevels {
  double imu_sigma = 0.0;          // m/s^2 per axis
  double mag_sigma = 0.0;          // uT per axis
  double pixel_sigma = 0.0;        // full scale = 1
  Eigen::Vector3d hard_iron = Eigen::Vector3d::Zero();  // uT, device frame
  double heading_bias = 0.0;       // rad, rotation of the magnetic north
  double speed_jitter = 0.0;       // relative per-segment speed spread
};

struct SimScenario {
  std::string name = "scenario";
  RouteSpec route = RouteSpec::rectangle();
  GaitProfile gait{};
  std::vector<LedFixture> fixtures;
  PacketSchema schema{};
  CameraModel camera{};
  NoiseLevels noise{};
  double oracle_k1 = 0.19;
  /// Phone held this far ahead of the body; it swings laterally on turns.
  double arm_length = 0.0;
  double stand_time = 1.0;     // s standing still before and after the walk
  double sample_rate = 250.0;  // sps
  double field_horizontal = 30.0;  // uT
  double field_vertical = 40.0;    // uT, pointing down
  StepDetectorParams detector{};
  std::uint64_t seed = 1;

  void validate() const;
};

struct FrameRecord {
  FrameImage image;
  std::size_t fixture_index = 0;
  Eigen::Vector2d phone_xy = Eigen::Vector2d::Zero();
};

struct SensorLog {
  std::vector<ImuSample> imu;
  std::vector<FrameRecord> frames;
};

/// Body and phone position at time t, from the ground-truth timeline.
struct TruthTimeline {
  double stand_time = 0.0;
  Pose2D start = Pose2D::Zero();
  std::vector<double> step_start;  // time each step starts
  std::vector<double> step_end;
  std::vector<Pose2D> from, to;
  std::vector<double> alpha_from, alpha_to;
  double arm_length = 0.0;

  Pose2D body(double t) const;
  Pose2D phone(double t) const;
};

struct GroundTruth {
  Pose2D start = Pose2D::Zero();
  /// Body position at the end of every step.
  std::vector<Pose2D> step_positions;
  std::vector<double> step_times;
  std::vector<double> step_lengths;
  std::vector<double> headings;
  /// Index of the last step of every lap.
  std::vector<std::size_t> lap_end_steps;
  /// Target fourth-root Weinberg term of every step under the oracle k1.
  std::vector<double> weinberg_roots;
  TruthTimeline timeline;
};

std::pair<SensorLog, GroundTruth> synth_walk(const SimScenario& scenario);

/// Thirty seeded scenarios over the 12 m x 6 m rectangle (3 laps, 3 LEDs),
/// alternating between the 0.9-1.2 m/s and 1.4-1.7 m/s speed regimes.
std::vector<SimScenario> make_reference_scenarios(std::uint64_t seed = 2024);

/// Builds the three equally spaced luminaires of the reference layout.
std::vector<LedFixture> reference_fixtures(const RouteSpec& route, std::uint64_t seed);

}  // namespace vlpdr
