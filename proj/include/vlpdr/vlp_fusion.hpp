#pragma once

// Proximity positioning from decoded LED IDs, single-LED step-length
// calibration from ROI displacement, and the proximity/dead-reckoning hybrid.

#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "vlpdr/bits.hpp"
#include "vlpdr/pdr.hpp"
#include "vlpdr/rolling_shutter.hpp"

namespace vlpdr {

/// Luminaire database keyed by LED ID.
class FixtureDb {
 public:
  /// Throws SchemaError on a duplicate ID.
  void add(const LedFixture& fixture);
  const LedFixture& at(const LedId& id) const;  // DatabaseMiss when absent
  const LedFixture* find(const LedId& id) const;
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::vector<LedFixture> fixtures() const;

 private:
  std::map<LedId, LedFixture> entries_;
};

Pose2D proximity_fix(const LedId& id, const FixtureDb& db);

/// Scale from ROI pixels to meters. `Dimensional` uses R / r (meters per
/// pixel); `Literal` applies r / R as printed in the original formulation.
enum class ScaleMode { Dimensional, Literal };

struct RoiRecord {
  std::size_t step_index = 0;
  Eigen::Vector2d center_px = Eigen::Vector2d::Zero();
  double radius_px = 0.0;
  double alpha = 0.0;
};

struct RoiTrack {
  std::vector<RoiRecord> records;
  /// Step indices rejected by the turn gate.
  std::vector<std::size_t> discarded;
};

double pixel_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b);

/// D_n for step n, from the records of steps n-1 and n.
double step_displacement(const RoiTrack& track, std::size_t step_index, const LedFixture& fixture,
                         ScaleMode mode = ScaleMode::Dimensional);

struct GateResult {
  /// Mean displacement over the kept steps; empty when every step turned.
  std::optional<double> d_av;
  std::vector<std::size_t> kept;
  std::vector<std::size_t> discarded;
};

/// Turn gate over parallel arrays: entries with |dalpha| >= t_alpha are
/// discarded, the rest averaged. Indices refer to positions in the arrays.
GateResult gated_mean(std::span<const double> displacements, std::span<const double> dalpha, double t_alpha);

/// Applies the gate to every adjacent record pair of the track and stores
/// the discarded step indices in `track.discarded`.
GateResult gate_and_average(RoiTrack& track, double t_alpha, const LedFixture& fixture,
                            ScaleMode mode = ScaleMode::Dimensional);

/// k1 = D_av / (a_zmax^2 - a_zmin^2)^(1/4).
double update_k1(double d_av, const StepEvent& step);
/// Same inverse against a precomputed (averaged) fourth-root term.
double update_k1(double d_av, double weinberg_root_term);

enum class PositioningMode { PdrOnly, VlpPdr, Calibrated };

const char* to_string(PositioningMode mode);
PositioningMode positioning_mode_from_string(const std::string& s);

struct CalibrationState {
  double k1 = 0.5;
  double t_alpha = std::numbers::pi / 6.0;
  std::optional<std::size_t> last_calibration_step;
};

enum class FixSource { DeadReckoned, Proximity };

struct PositionFix {
  Pose2D pose = Pose2D::Zero();
  FixSource source = FixSource::DeadReckoned;
  double t = 0.0;
};

/// What the camera front end reports for one step: the ROI at the step
/// instant and, once the fusion decoder has finished, the LED ID.
struct VlpObservation {
  std::optional<LedId> id;
  RoiObservation roi;
};

struct HybridConfig {
  PositioningMode mode = PositioningMode::Calibrated;
  double k1 = 0.5;
  double t_alpha = std::numbers::pi / 6.0;
  Pose2D initial_pose = Pose2D::Zero();
  CameraModel camera{};
  ScaleMode scale = ScaleMode::Dimensional;
};

struct CalibrationEvent {
  std::size_t step_index = 0;
  LedId fixture;
  double d_av = 0.0;
  double k1_before = 0.0;
  double k1_after = 0.0;
  RoiTrack track;
};

/// Hybrid proximity / dead-reckoning positioner for one pedestrian track.
///
/// Steps outside any LED pass are dead reckoned with the current k1. While a
/// fixture is in view the pose is anchored to the fixture position at the
/// closest-approach step (smallest ROI offset from the image center) and
/// dead reckoned from there. In calibrated mode the pass also refreshes k1
/// from the turn-gated ROI displacements when the LED leaves the view.
class HybridPositioner {
 public:
  HybridPositioner(HybridConfig config, FixtureDb db);

  PositionFix step(const StepEvent& step, HeadingEstimate heading,
                   const std::optional<VlpObservation>& vlp = std::nullopt);

  /// Closes an open LED pass (runs calibration if enabled).
  void finish_pass();

  const CalibrationState& state() const noexcept { return state_; }
  const Pose2D& pose() const noexcept { return pose_; }
  const std::vector<CalibrationEvent>& calibrations() const noexcept { return calibrations_; }
  /// Skipped calibrations (singular extremes or a fully gated pass).
  std::size_t skipped_calibrations() const noexcept { return skipped_; }
  /// Steps whose decoded ID was missing from the database.
  std::size_t unknown_ids() const noexcept { return unknown_ids_; }

 private:
  struct PassStep {
    std::size_t index;
    StepEvent event;
    double length;
    double alpha;
    double offset_px;
  };

  HybridConfig config_;
  FixtureDb db_;
  CalibrationState state_;
  Pose2D pose_;
  std::size_t next_index_ = 0;

  bool in_pass_ = false;
  std::vector<PassStep> pass_steps_;
  std::optional<LedId> pass_id_;
  RoiTrack pass_track_;

  std::vector<CalibrationEvent> calibrations_;
  std::size_t skipped_ = 0;
  std::size_t unknown_ids_ = 0;
};

}  // namespace vlpdr
