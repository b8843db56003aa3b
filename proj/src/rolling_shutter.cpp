#include "vlpdr/rolling_shutter.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include <Eigen/Dense>

#include "vlpdr/error.hpp"

namespace vlpdr {

namespace {

bool circle_touches_frame(const Eigen::Vector2d& c, double r, int cols, int rows) {
  const double nx = std::clamp(c.x(), 0.0, static_cast<double>(cols));
  const double ny = std::clamp(c.y(), 0.0, static_cast<double>(rows));
  return (Eigen::Vector2d(nx, ny) - c).squaredNorm() < r * r;
}

bool circle_inside_frame(const Eigen::Vector2d& c, double r, int cols, int rows) {
  return c.x() - r >= 0.0 && c.y() - r >= 0.0 && c.x() + r <= cols && c.y() + r <= rows;
}

long bit_index(double phase_bits, int row, double rpb) {
  return static_cast<long>(std::floor(phase_bits + row / rpb));
}

void box_blur(Eigen::MatrixXd& img, int radius) {
  if (radius <= 0) return;
  const auto blur_rows = [radius](Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, j - radius);
        const Eigen::Index hi = std::min<Eigen::Index>(m.cols() - 1, j + radius);
        out(i, j) = m.row(i).segment(lo, hi - lo + 1).mean();
      }
    }
    m = out;
  };
  blur_rows(img);
  Eigen::MatrixXd t = img.transpose();
  blur_rows(t);
  img = t.transpose();
}

// 1-D closing along image columns with a vertical structuring element.
void close_vertical(std::vector<std::uint8_t>& mask, int rows, int cols, int length) {
  const int half = length / 2;
  std::vector<int> prefix(static_cast<std::size_t>(rows) + 1);
  std::vector<std::uint8_t> tmp(mask.size());
  const auto pass = [&](const std::vector<std::uint8_t>& src, std::vector<std::uint8_t>& dst, bool dilate) {
    for (int x = 0; x < cols; ++x) {
      prefix[0] = 0;
      for (int y = 0; y < rows; ++y) prefix[y + 1] = prefix[y] + src[static_cast<std::size_t>(y) * cols + x];
      for (int y = 0; y < rows; ++y) {
        const int lo = std::max(0, y - half);
        const int hi = std::min(rows, y + half + 1);
        const int on = prefix[hi] - prefix[lo];
        // Out-of-frame rows count as foreground for erosion.
        dst[static_cast<std::size_t>(y) * cols + x] = dilate ? on > 0 : on == hi - lo;
      }
    }
  };
  pass(mask, tmp, true);
  pass(tmp, mask, false);
}

struct Component {
  int area = 0;
  int min_x = 0, max_x = 0;
};

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

}  // namespace

void CameraModel::validate() const {
  if (rows <= 0 || cols <= 0) throw ContractViolation("camera dimensions must be positive");
  if (!(row_readout_time > 0) || !(frame_rate > 0) || !(focal_scale > 0)) {
    throw ContractViolation("camera timing and focal scale must be positive");
  }
  if (rows * row_readout_time > 1.0 / frame_rate + 1e-12) {
    throw ContractViolation("row readout does not fit in one frame period");
  }
}

void LedFixture::validate() const {
  if (!(radius > 0) || !(mount_height > 0) || !(bit_rate > 0)) {
    throw ContractViolation("fixture radius, height and bit rate must be positive");
  }
}

double rows_per_bit(const CameraModel& camera, const LedFixture& fixture) {
  return 1.0 / (fixture.bit_rate * camera.row_readout_time);
}

double stream_phase(const LedFixture& fixture, double t, double offset_bits) {
  return t * fixture.bit_rate + offset_bits;
}

RoiObservation project_roi(const CameraModel& camera, const LedFixture& fixture, const Eigen::Vector2d& phone_xy) {
  if (!(fixture.mount_height > 0)) throw ContractViolation("mount height must be positive");
  const double scale = camera.focal_scale / fixture.mount_height;
  const Eigen::Vector2d rel = fixture.world_xy - phone_xy;
  RoiObservation roi;
  // East maps to +column, north to -row.
  roi.center_px = camera.image_center() + scale * Eigen::Vector2d(rel.x(), -rel.y());
  roi.radius_px = scale * fixture.radius;
  roi.valid = circle_touches_frame(roi.center_px, roi.radius_px, camera.cols, camera.rows);
  roi.clipped = !circle_inside_frame(roi.center_px, roi.radius_px, camera.cols, camera.rows);
  return roi;
}

FrameImage render_frame(const CameraModel& camera, const LedFixture& fixture, const Bits& stream, double phase_bits,
                        const RoiObservation& roi, const RenderNoise& noise, const RenderLevels& levels) {
  const double rpb = rows_per_bit(camera, fixture);
  if (rpb < 2.0) throw UnsupportedDensity("rows_per_bit " + std::to_string(rpb) + " is below 2");
  if (!roi.valid) throw ContractViolation("cannot render an invalid ROI");
  if (stream.empty()) throw ContractViolation("empty transmit stream");

  const long len = static_cast<long>(stream.size());
  const auto bit_at = [&](long idx) { return stream[static_cast<std::size_t>(((idx % len) + len) % len)]; };

  Eigen::MatrixXd img = Eigen::MatrixXd::Constant(camera.rows, camera.cols, levels.background);
  const double cx = roi.center_px.x(), cy = roi.center_px.y(), r2 = roi.radius_px * roi.radius_px;
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - roi.radius_px)));
  const int y1 = std::min(camera.rows - 1, static_cast<int>(std::ceil(cy + roi.radius_px)));
  for (int y = y0; y <= y1; ++y) {
    const double dy = y + 0.5 - cy;
    if (dy * dy > r2) continue;
    const double half = std::sqrt(r2 - dy * dy);
    const int x0 = std::max(0, static_cast<int>(std::ceil(cx - half - 0.5)));
    const int x1 = std::min(camera.cols - 1, static_cast<int>(std::floor(cx + half - 0.5)));
    const double v = bit_at(bit_index(phase_bits, y, rpb)) ? levels.led_on : levels.led_off;
    for (int x = x0; x <= x1; ++x) img(y, x) = v;
  }

  box_blur(img, noise.blur_radius);
  if (noise.pixel_sigma > 0) {
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> n01(0.0, noise.pixel_sigma);
    for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] += n01(rng);
  }

  FrameImage frame;
  frame.pixels = (img.array().max(0.0).min(1.0) * 255.0).round().cast<std::uint8_t>();
  frame.rows_per_bit = rpb;
  frame.truth_roi = roi;

  // Rows covered by the disc on the center column.
  const double col = std::clamp(std::floor(cx), 0.0, camera.cols - 1.0) + 0.5;
  const double dx = col - cx;
  if (dx * dx <= r2) {
    const double half = std::sqrt(r2 - dx * dx);
    const int top = std::max(0, static_cast<int>(std::ceil(cy - half - 0.5)));
    const int bottom = std::min(camera.rows - 1, static_cast<int>(std::floor(cy + half - 0.5)));
    if (top <= bottom) {
      frame.first_bit = bit_index(phase_bits, top, rpb);
      frame.last_bit = bit_index(phase_bits, bottom, rpb);
    }
  }
  return frame;
}

int otsu_threshold(const GrayImage& pixels) {
  std::array<double, 256> hist{};
  for (Eigen::Index i = 0; i < pixels.size(); ++i) hist[pixels.data()[i]] += 1.0;
  const double total = static_cast<double>(pixels.size());
  double sum_all = 0;
  for (int v = 0; v < 256; ++v) sum_all += v * hist[v];
  double w0 = 0, sum0 = 0, best = -1;
  int best_t = 128;
  for (int t = 0; t < 255; ++t) {
    w0 += hist[t];
    sum0 += t * hist[t];
    const double w1 = total - w0;
    if (w0 == 0 || w1 == 0) continue;
    const double m0 = sum0 / w0, m1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (m0 - m1) * (m0 - m1);
    if (between > best) {
      best = between;
      best_t = t + 1;
    }
  }
  return best_t;
}

RoiObservation extract_roi(const GrayImage& pixels, double rpb, const ExtractOptions& options) {
  const int rows = static_cast<int>(pixels.rows()), cols = static_cast<int>(pixels.cols());
  RoiObservation none;
  if (rows == 0 || cols == 0) return none;

  // A frame with no contrast at all holds no LED.
  const auto [mn, mx] = std::minmax_element(pixels.data(), pixels.data() + pixels.size());
  if (*mx - *mn < 32) return none;

  const int thr = otsu_threshold(pixels);
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(rows) * cols);
  for (int i = 0; i < rows * cols; ++i) mask[i] = pixels.data()[i] >= thr;
  close_vertical(mask, rows, cols, static_cast<int>(std::ceil(2.0 * rpb)) | 1);

  // 4-connected labelling with union-find.
  std::vector<int> parent(mask.size());
  std::iota(parent.begin(), parent.end(), 0);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const int i = y * cols + x;
      if (!mask[i]) continue;
      if (x > 0 && mask[i - 1]) parent[find_root(parent, i)] = find_root(parent, i - 1);
      if (y > 0 && mask[i - cols]) parent[find_root(parent, i)] = find_root(parent, i - cols);
    }
  }
  std::vector<int> label(mask.size(), -1);
  std::vector<Component> comps;
  std::vector<int> root_to_comp(mask.size(), -1);
  for (int y = 0; y < rows; ++y) {
    for (int x = 0; x < cols; ++x) {
      const int i = y * cols + x;
      if (!mask[i]) continue;
      const int r = find_root(parent, i);
      if (root_to_comp[r] < 0) {
        root_to_comp[r] = static_cast<int>(comps.size());
        comps.push_back({0, x, x});
      }
      auto& c = comps[root_to_comp[r]];
      ++c.area;
      c.min_x = std::min(c.min_x, x);
      c.max_x = std::max(c.max_x, x);
      label[i] = root_to_comp[r];
    }
  }
  if (comps.empty()) return none;

  const auto largest = static_cast<int>(
      std::max_element(comps.begin(), comps.end(), [](auto& a, auto& b) { return a.area < b.area; }) -
      comps.begin());
  // Long dark runs can split one disc into bands that share its column span.
  std::vector<std::uint8_t> keep(comps.size(), 0);
  int area = 0;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const bool overlaps = comps[c].max_x >= comps[largest].min_x && comps[c].min_x <= comps[largest].max_x;
    if (static_cast<int>(c) == largest || (overlaps && comps[c].area >= options.min_area)) {
      keep[c] = 1;
      area += comps[c].area;
    }
  }
  if (area < options.min_area) return none;

  // Circle fit to the chord end points of every foreground row.
  std::vector<Eigen::Vector2d> edge;
  double sx = 0, sy = 0;
  for (int y = 0; y < rows; ++y) {
    int lo = -1, hi = -1;
    for (int x = 0; x < cols; ++x) {
      const int l = label[y * cols + x];
      if (l < 0 || !keep[l]) continue;
      if (lo < 0) lo = x;
      hi = x;
      sx += x + 0.5;
      sy += y + 0.5;
    }
    if (lo < 0) continue;
    if (lo > 0) edge.emplace_back(lo, y + 0.5);
    if (hi < cols - 1) edge.emplace_back(hi + 1.0, y + 0.5);
  }

  RoiObservation roi;
  bool fitted = false;
  if (edge.size() >= 8) {
    Eigen::MatrixXd a(edge.size(), 3);
    Eigen::VectorXd b(edge.size());
    for (std::size_t i = 0; i < edge.size(); ++i) {
      a.row(static_cast<Eigen::Index>(i)) << edge[i].x(), edge[i].y(), 1.0;
      b(static_cast<Eigen::Index>(i)) = -edge[i].squaredNorm();
    }
    const Eigen::Vector3d sol = a.colPivHouseholderQr().solve(b);
    const Eigen::Vector2d c(-0.5 * sol(0), -0.5 * sol(1));
    const double r2 = c.squaredNorm() - sol(2);
    if (r2 > 0 && std::isfinite(r2)) {
      roi.center_px = c;
      roi.radius_px = std::sqrt(r2);
      fitted = true;
    }
  }
  if (!fitted) {
    roi.center_px = Eigen::Vector2d(sx / area, sy / area);
    roi.radius_px = std::sqrt(area / M_PI);
  }
  if (roi.center_px.x() < 0 || roi.center_px.y() < 0 || roi.center_px.x() > cols || roi.center_px.y() > rows) {
    return none;
  }
  roi.valid = roi.radius_px > 0;
  roi.clipped = !circle_inside_frame(roi.center_px, roi.radius_px, cols, rows);
  return roi;
}

std::vector<double> roi_profile(const GrayImage& pixels, const RoiObservation& roi, int half_width, double margin) {
  std::vector<double> out;
  if (!roi.valid) return out;
  const int rows = static_cast<int>(pixels.rows()), cols = static_cast<int>(pixels.cols());
  const int xc = static_cast<int>(std::floor(roi.center_px.x()));
  const int x0 = std::max(0, xc - half_width), x1 = std::min(cols - 1, xc + half_width);
  const double reach = roi.radius_px - margin;
  if (reach <= 0 || x0 > x1) return out;
  const int y0 = std::max(0, static_cast<int>(std::ceil(roi.center_px.y() - reach - 0.5)));
  const int y1 = std::min(rows - 1, static_cast<int>(std::floor(roi.center_px.y() + reach - 0.5)));
  for (int y = y0; y <= y1; ++y) {
    double s = 0;
    for (int x = x0; x <= x1; ++x) s += pixels(y, x);
    out.push_back(s / (255.0 * (x1 - x0 + 1)));
  }
  return out;
}

void write_pgm(const std::string& path, const GrayImage& pixels) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path);
  os << "P5\n" << pixels.cols() << ' ' << pixels.rows() << "\n255\n";
  os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
}

}  // namespace vlpdr
