#pragma once

// Batch execution: localization runs over simulated walks, decode benchmarks
// and SVG trajectory plots.

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlpdr/occ_codec.hpp"
#include "vlpdr/pdr.hpp"
#include "vlpdr/vlp_fusion.hpp"
#include "vlpdr/walk_sim.hpp"

namespace vlpdr {

namespace fs = std::filesystem;

struct EngineParams {
  std::size_t b_ref = 80;
  double t_alpha = std::numbers::pi / 6.0;
  /// Absolute initial k1; when absent, `k1_scale` times the scenario oracle.
  std::optional<double> k1_init;
  double k1_scale = 1.0;
  StepDetectorParams detector{};
  DemodOptions demod{};
  ScaleMode scale = ScaleMode::Dimensional;
  /// Samples trimmed from both ends of every heading window.
  std::size_t heading_guard = 3;
};

struct RunConfig {
  fs::path scenario_path;
  std::vector<PositioningMode> modes{PositioningMode::PdrOnly, PositioningMode::VlpPdr, PositioningMode::Calibrated};
  EngineParams engine{};
  fs::path output_dir = "out";

  /// Versioned JSON; relative paths resolve against `base_dir`.
  static RunConfig from_json(const nlohmann::json& j, const fs::path& base_dir = {});
  void validate() const;
};

struct ErrorReport {
  PositioningMode mode = PositioningMode::PdrOnly;
  /// Start-point error at the end of every lap.
  std::vector<double> round_errors;
  double average = 0.0;
  /// Distance from every fix to the true body position at the same time.
  std::vector<double> step_errors;
};

/// Step events plus one heading per step.
struct PdrTrack {
  std::vector<StepEvent> steps;
  std::vector<HeadingEstimate> headings;
};

PdrTrack run_pdr_front_end(const std::vector<ImuSample>& imu, const StepDetectorParams& detector = {},
                           std::size_t heading_guard = 3);

struct FrameObservation {
  double t = 0.0;
  RoiObservation roi;
  /// Consecutive frames with a visible ROI share a pass number.
  std::size_t pass = 0;
  /// ID known to the decoder after this frame.
  std::optional<LedId> id;
};

/// Camera front end: ROI extraction and fusion decoding over every frame.
struct VlpTrack {
  std::vector<FrameObservation> frames;
  std::vector<DecodeEvent> decode_events;
  std::size_t passes = 0;
  std::size_t decoded_passes = 0;
  std::size_t timeouts = 0;
  double frame_period = 1.0 / 15.0;
};

VlpTrack run_vlp_front_end(const SensorLog& log, const PacketSchema& schema, const CameraModel& camera,
                           std::size_t b_ref, const DemodOptions& demod = {});

/// ROI at time t, interpolated between the bracketing frames of one pass.
/// A lone neighbouring frame yields a clipped (anchor-only) observation.
std::optional<VlpObservation> observation_at(const VlpTrack& track, double t);

struct LocalizeResult {
  PositioningMode mode = PositioningMode::PdrOnly;
  std::vector<PositionFix> fixes;
  std::vector<CalibrationEvent> calibrations;
  double final_k1 = 0.0;
  std::optional<ErrorReport> report;
};

/// Runs one positioning mode. `vlp` is ignored in pdr_only mode.
LocalizeResult localize(const PdrTrack& pdr, const VlpTrack* vlp, const FixtureDb& db, const HybridConfig& config,
                        const GroundTruth* truth = nullptr);

ErrorReport score(const std::vector<PositionFix>& fixes, const GroundTruth& truth, PositioningMode mode);

/// Full pipeline for one scenario and every configured mode.
std::vector<LocalizeResult> localize_scenario(const SimScenario& scenario, const EngineParams& engine,
                                              const std::vector<PositioningMode>& modes,
                                              const SensorLog* log = nullptr, const GroundTruth* truth = nullptr);

/// Reads the scenario, runs every mode and writes trajectory_<mode>.csv,
/// ground_truth.csv, steps.csv, decode_report.csv and report.json.
std::vector<LocalizeResult> run_localize(const RunConfig& config);

// ---------------------------------------------------------------- decode bench

struct BenchCell {
  std::string mode = "bits";  // "bits" or "render"
  std::size_t window_bits = 18;
  double rows_per_bit = 3.0;
  double roi_diameter_px = 60.0;
  std::size_t b_ref = 80;
  double flip_prob = 0.0;
  double pixel_sigma = 0.0;
  std::size_t trials = 1000;
};

struct BenchRow {
  BenchCell cell;
  double fusion_accuracy_pct = 0.0;
  double fusion_mean_frames = 0.0;
  double fusion_mean_k = 0.0;
  double fusion_latency_ms = 0.0;
  double single_accuracy_pct = 0.0;
  double single_mean_frames = 0.0;
  double single_latency_ms = 0.0;
};

struct BenchGrid {
  std::string mode = "bits";
  std::vector<std::size_t> window_bits{18};
  std::vector<double> rows_per_bit{3.0};
  std::vector<double> roi_diameter_px{60.0};
  std::vector<std::size_t> b_ref{80};
  std::vector<double> flip_prob{0.0};
  std::vector<double> pixel_sigma{0.0};
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  double frame_rate = 15.0;
  double bit_rate = 15000.0;
  fs::path output = "decode_bench.csv";

  static BenchGrid from_json(const nlohmann::json& j, const fs::path& base_dir = {});
  std::vector<BenchCell> cells() const;
};

BenchRow run_bench_cell(const BenchCell& cell, std::uint64_t seed, double frame_rate = 15.0,
                        double bit_rate = 15000.0, const PacketSchema& schema = {});
std::vector<BenchRow> decode_bench(const BenchGrid& grid);
void write_bench_csv(const fs::path& path, const std::vector<BenchRow>& rows);

/// Payload bits of one frame decoded alone; requires every ID position.
std::optional<LedId> single_frame_decode(const Bits& raw, const PacketSchema& schema);

// ---------------------------------------------------------------------- plots

struct PlotSeries {
  std::string label;
  std::vector<Pose2D> points;
};

/// One SVG with the reference path (if any) and every trajectory.
std::string render_svg(const std::vector<PlotSeries>& trajectories, const std::vector<Pose2D>& reference);

/// Plots every directory under `dir` (and `dir` itself) holding
/// trajectory_*.csv files. Returns the written SVG paths.
std::vector<fs::path> emit_plots(const fs::path& dir);

}  // namespace vlpdr
