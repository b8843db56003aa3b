#pragma once

// Rolling-shutter frame synthesis for a modulated circular LED, and the ROI
// extraction a receiver runs on such frames (binarize, close, fit).

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vlpdr/bits.hpp"

namespace vlpdr {

using GrayImage = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Nadir-pointing pinhole camera with a row-sequential shutter.
struct CameraModel {
  int rows = 480;
  int cols = 640;
  double row_readout_time = 20e-6;  // s per row
  double frame_rate = 15.0;         // frames per second
  double focal_scale = 500.0;       // px = focal_scale * meters / distance

  void validate() const;
  Eigen::Vector2d image_center() const { return {0.5 * cols, 0.5 * rows}; }
};

struct LedFixture {
  LedId id;
  Eigen::Vector2d world_xy = Eigen::Vector2d::Zero();
  double mount_height = 2.0;  // m above the phone plane
  double radius = 0.25;       // m
  double bit_rate = 15000.0;  // bits per second

  void validate() const;
};

/// LED disc in image coordinates (x = column, y = row, pixel corners at integers).
struct RoiObservation {
  Eigen::Vector2d center_px = Eigen::Vector2d::Zero();
  double radius_px = 0.0;
  bool valid = false;
  /// True when part of the disc lies outside the frame.
  bool clipped = false;
};

struct RenderLevels {
  double background = 0.05;
  double led_off = 0.25;
  double led_on = 0.9;
};

struct RenderNoise {
  double pixel_sigma = 0.0;  // intensity units, full scale = 1
  int blur_radius = 0;       // box blur half-width in pixels
  std::uint64_t seed = 0;
};

struct FrameImage {
  GrayImage pixels;
  double timestamp = 0.0;
  double rows_per_bit = 0.0;
  RoiObservation truth_roi;
  /// Unwrapped stream indices of the first and last bit rendered on the
  /// column through the ROI center (inclusive). Empty window when first > last.
  long first_bit = 0;
  long last_bit = -1;
};

double rows_per_bit(const CameraModel& camera, const LedFixture& fixture);

/// Bit offset of the transmitter stream at capture time `t`.
double stream_phase(const LedFixture& fixture, double t, double offset_bits = 0.0);

RoiObservation project_roi(const CameraModel& camera, const LedFixture& fixture, const Eigen::Vector2d& phone_xy);

/// Renders one frame. Row i is read out at phase + i / rows_per_bit bits into
/// the cyclic `stream`; rows inside the ROI are bright when that bit is 1.
FrameImage render_frame(const CameraModel& camera, const LedFixture& fixture, const Bits& stream,
                        double phase_bits, const RoiObservation& roi, const RenderNoise& noise = {},
                        const RenderLevels& levels = {});

struct ExtractOptions {
  /// Components smaller than this (px) are not an LED.
  int min_area = 40;
};

RoiObservation extract_roi(const GrayImage& pixels, double rows_per_bit, const ExtractOptions& options = {});
inline RoiObservation extract_roi(const FrameImage& frame, const ExtractOptions& options = {}) {
  return extract_roi(frame.pixels, frame.rows_per_bit, options);
}

/// Otsu threshold of an 8-bit image, as the first level counted as foreground.
int otsu_threshold(const GrayImage& pixels);

/// Grayscale profile (full scale 1) down the ROI center, averaged over
/// 2 * half_width + 1 columns and trimmed `margin` px inside the disc edge.
std::vector<double> roi_profile(const GrayImage& pixels, const RoiObservation& roi, int half_width = 2,
                                double margin = 1.5);

void write_pgm(const std::string& path, const GrayImage& pixels);

}  // namespace vlpdr
