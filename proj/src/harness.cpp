#include "vlpdr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "vlpdr/io.hpp"

namespace vlpdr {

using nlohmann::json;

namespace {

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

template <typename T>
std::vector<T> list_or(const json& j, const char* key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_array()) return v.get<std::vector<T>>();
  return {v.get<T>()};
}

fs::path resolve(const fs::path& p, const fs::path& base) { return p.is_relative() ? base / p : p; }

}  // namespace

// ------------------------------------------------------------------ config

RunConfig RunConfig::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  if (value_or(j, "version", 1) != 1) throw ConfigError("unsupported run config version");
  RunConfig c;
  try {
    if (!j.contains("scenario")) throw ConfigError("run config has no scenario path");
    c.scenario_path = resolve(j.at("scenario").get<std::string>(), base_dir);
    if (j.contains("modes") || j.contains("mode")) {
      c.modes.clear();
      for (const auto& m : list_or<std::string>(j, j.contains("modes") ? "modes" : "mode", {})) {
        c.modes.push_back(positioning_mode_from_string(m));
      }
    }
    c.output_dir = resolve(value_or<std::string>(j, "output_dir", "out"), base_dir);
    if (j.contains("engine")) {
      const auto& e = j.at("engine");
      auto& p = c.engine;
      p.b_ref = value_or(e, "b_ref", p.b_ref);
      if (e.contains("t_alpha_deg")) p.t_alpha = e.at("t_alpha_deg").get<double>() * std::numbers::pi / 180.0;
      if (e.contains("k1_init")) p.k1_init = e.at("k1_init").get<double>();
      p.k1_scale = value_or(e, "k1_scale", p.k1_scale);
      p.heading_guard = value_or(e, "heading_guard", p.heading_guard);
      const auto scale = value_or<std::string>(e, "scale_mode", "dimensional");
      if (scale == "dimensional") {
        p.scale = ScaleMode::Dimensional;
      } else if (scale == "literal") {
        p.scale = ScaleMode::Literal;
      } else {
        throw ConfigError("unknown scale_mode '" + scale + "'");
      }
      if (e.contains("detector")) {
        const auto& d = e.at("detector");
        p.detector.smooth_window = value_or(d, "smooth_window", p.detector.smooth_window);
        p.detector.peak_threshold = value_or(d, "peak_threshold", p.detector.peak_threshold);
        p.detector.min_step_interval = value_or(d, "min_step_interval", p.detector.min_step_interval);
        p.detector.gravity_window = value_or(d, "gravity_window", p.detector.gravity_window);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  c.validate();
  return c;
}

void RunConfig::validate() const {
  if (modes.empty()) throw ConfigError("no positioning mode selected");
  if (engine.b_ref == 0) throw ConfigError("b_ref must be positive");
  if (!(engine.t_alpha > 0)) throw ConfigError("t_alpha must be positive");
  if (engine.k1_init && !(*engine.k1_init > 0)) throw ConfigError("k1_init must be positive");
  if (!(engine.k1_scale > 0)) throw ConfigError("k1_scale must be positive");
}

// -------------------------------------------------------------- front ends

PdrTrack run_pdr_front_end(const std::vector<ImuSample>& imu, const StepDetectorParams& detector,
                           std::size_t heading_guard) {
  PdrTrack track;
  track.steps = detect_steps(imu, detector);
  const std::span<const ImuSample> all(imu);
  for (std::size_t j = 0; j < track.steps.size(); ++j) {
    const std::size_t begin = j == 0 ? 0 : track.steps[j - 1].sample_index + 1;
    const std::size_t end = track.steps[j].sample_index + 1;
    std::size_t lo = begin + heading_guard, hi = end > heading_guard ? end - heading_guard : 0;
    if (lo >= hi) lo = begin, hi = end;
    track.headings.push_back(estimate_heading(all.subspan(lo, hi - lo)));
  }
  return track;
}

VlpTrack run_vlp_front_end(const SensorLog& log, const PacketSchema& schema, const CameraModel& camera,
                           std::size_t b_ref, const DemodOptions& demod) {
  VlpTrack track;
  track.frame_period = 1.0 / camera.frame_rate;
  StreamDecoder decoder({schema, b_ref, demod});
  const std::size_t budget = default_frame_budget(b_ref, schema.id_len());
  std::optional<LedId> id;
  double last_t = -1e300;
  bool pass_open = false;

  const auto close_pass = [&] {
    if (pass_open && !id) ++track.timeouts;
  };

  for (std::size_t k = 0; k < log.frames.size(); ++k) {
    const auto& frame = log.frames[k].image;
    if (!pass_open || frame.timestamp - last_t > 1.5 * track.frame_period) {
      close_pass();
      pass_open = true;
      ++track.passes;
      decoder.restart();
      id.reset();
    }
    last_t = frame.timestamp;

    FrameObservation obs;
    obs.t = frame.timestamp;
    obs.pass = track.passes;
    obs.roi = extract_roi(frame);
    if (obs.roi.valid && !id) {
      const std::size_t before = decoder.events().size();
      const auto result = decoder.push_profile(roi_profile(frame.pixels, obs.roi), frame.rows_per_bit);
      for (std::size_t e = before; e < decoder.events().size(); ++e) {
        auto ev = decoder.events()[e];
        ev.frame_index = k;
        track.decode_events.push_back(ev);
      }
      if (result) {
        id = result->id;
        ++track.decoded_passes;
      } else if (decoder.frames_consumed() >= budget) {
        track.decode_events.push_back({k, decoder.accumulator().k(), decoder.accumulator().b_cnt(), "", "timeout"});
        decoder.restart();
      }
    }
    obs.id = id;
    track.frames.push_back(std::move(obs));
  }
  close_pass();
  return track;
}

std::optional<VlpObservation> observation_at(const VlpTrack& track, double t) {
  const auto& f = track.frames;
  const auto it = std::upper_bound(f.begin(), f.end(), t, [](double v, const FrameObservation& o) { return v < o.t; });
  const FrameObservation* b = it == f.end() ? nullptr : &*it;
  const FrameObservation* a = it == f.begin() ? nullptr : &*std::prev(it);
  if (a && b && a->pass != b->pass) {
    // Only the side closer in time can belong to a pass covering t.
    (t - a->t <= b->t - t ? b : a) = nullptr;
  }
  const double period = track.frame_period;
  if (a && t - a->t > period) a = nullptr;
  if (b && b->t - t > period) b = nullptr;

  VlpObservation out;
  if (a && b && a->roi.valid && b->roi.valid) {
    const double u = (t - a->t) / (b->t - a->t);
    out.roi.valid = true;
    out.roi.center_px = a->roi.center_px + u * (b->roi.center_px - a->roi.center_px);
    out.roi.radius_px = a->roi.radius_px + u * (b->roi.radius_px - a->roi.radius_px);
    out.roi.clipped = a->roi.clipped || b->roi.clipped;
    out.id = a->id;
    return out;
  }
  const FrameObservation* one = (a && a->roi.valid) ? a : (b && b->roi.valid) ? b : nullptr;
  if (!one) return std::nullopt;
  out.roi = one->roi;
  out.roi.clipped = true;
  if (a) out.id = a->id;
  return out;
}

// ------------------------------------------------------------ localization

LocalizeResult localize(const PdrTrack& pdr, const VlpTrack* vlp, const FixtureDb& db, const HybridConfig& config,
                        const GroundTruth* truth) {
  LocalizeResult out;
  out.mode = config.mode;
  HybridPositioner positioner(config, db);
  out.fixes.push_back({config.initial_pose, FixSource::DeadReckoned, 0.0});
  for (std::size_t j = 0; j < pdr.steps.size(); ++j) {
    std::optional<VlpObservation> obs;
    if (config.mode != PositioningMode::PdrOnly && vlp) obs = observation_at(*vlp, pdr.steps[j].t);
    out.fixes.push_back(positioner.step(pdr.steps[j], pdr.headings[j], obs));
  }
  positioner.finish_pass();
  out.calibrations = positioner.calibrations();
  out.final_k1 = positioner.state().k1;
  if (truth) out.report = score(out.fixes, *truth, config.mode);
  return out;
}

ErrorReport score(const std::vector<PositionFix>& fixes, const GroundTruth& truth, PositioningMode mode) {
  ErrorReport r;
  r.mode = mode;
  for (const auto& f : fixes) r.step_errors.push_back((f.pose - truth.timeline.body(f.t)).norm());
  for (const auto lap_end : truth.lap_end_steps) {
    const double tau = truth.step_times[lap_end];
    const auto best = std::min_element(fixes.begin(), fixes.end(), [&](const PositionFix& x, const PositionFix& y) {
      return std::abs(x.t - tau) < std::abs(y.t - tau);
    });
    if (best == fixes.end()) throw ContractViolation("no fixes to score");
    r.round_errors.push_back((best->pose - truth.step_positions[lap_end]).norm());
  }
  double sum = 0;
  for (double e : r.round_errors) sum += e;
  r.average = r.round_errors.empty() ? 0.0 : sum / static_cast<double>(r.round_errors.size());
  return r;
}

std::vector<LocalizeResult> localize_scenario(const SimScenario& scenario, const EngineParams& engine,
                                              const std::vector<PositioningMode>& modes, const SensorLog* log,
                                              const GroundTruth* truth) {
  std::optional<std::pair<SensorLog, GroundTruth>> owned;
  if (!log || !truth) {
    owned = synth_walk(scenario);
    log = &owned->first;
    truth = &owned->second;
  }
  const PdrTrack pdr = run_pdr_front_end(log->imu, engine.detector, engine.heading_guard);

  FixtureDb db;
  for (const auto& f : scenario.fixtures) db.add(f);
  const bool needs_vlp = std::any_of(modes.begin(), modes.end(), [](auto m) { return m != PositioningMode::PdrOnly; });
  std::optional<VlpTrack> vlp;
  if (needs_vlp && !db.empty()) vlp = run_vlp_front_end(*log, scenario.schema, scenario.camera, engine.b_ref, engine.demod);

  HybridConfig cfg;
  cfg.k1 = engine.k1_init.value_or(engine.k1_scale * scenario.oracle_k1);
  cfg.t_alpha = engine.t_alpha;
  cfg.initial_pose = truth->start;
  cfg.camera = scenario.camera;
  cfg.scale = engine.scale;

  std::vector<LocalizeResult> out;
  for (const auto mode : modes) {
    cfg.mode = mode;
    out.push_back(localize(pdr, vlp ? &*vlp : nullptr, db, cfg, truth));
  }
  return out;
}

std::vector<LocalizeResult> run_localize(const RunConfig& config) {
  config.validate();
  const SimScenario scenario = io::read_scenario(config.scenario_path);
  const auto [log, truth] = synth_walk(scenario);
  auto results = localize_scenario(scenario, config.engine, config.modes, &log, &truth);

  const auto& dir = config.output_dir;
  fs::create_directories(dir);
  io::write_ground_truth_csv(dir / "ground_truth.csv", truth);

  const PdrTrack pdr = run_pdr_front_end(log.imu, config.engine.detector, config.engine.heading_guard);
  const double k1 = config.engine.k1_init.value_or(config.engine.k1_scale * scenario.oracle_k1);
  std::vector<io::StepRow> rows;
  for (std::size_t j = 0; j < pdr.steps.size(); ++j) {
    rows.push_back({pdr.steps[j], weinberg_length(pdr.steps[j], k1), pdr.headings[j].alpha});
  }
  io::write_steps_csv(dir / "steps.csv", rows);

  if (!scenario.fixtures.empty()) {
    const auto vlp = run_vlp_front_end(log, scenario.schema, scenario.camera, config.engine.b_ref, config.engine.demod);
    io::write_decode_report(dir / "decode_report.csv", vlp.decode_events);
  }

  json report{{"scenario", scenario.name}, {"modes", json::object()}};
  for (const auto& r : results) {
    io::write_fixes_csv(dir / ("trajectory_" + std::string(to_string(r.mode)) + ".csv"), r.fixes);
    json calibrations = json::array();
    for (const auto& c : r.calibrations) {
      calibrations.push_back({{"step", c.step_index},
                              {"fixture", c.fixture.hex()},
                              {"d_av", c.d_av},
                              {"k1_before", c.k1_before},
                              {"k1_after", c.k1_after}});
    }
    report["modes"][to_string(r.mode)] = {{"round_errors", r.report->round_errors},
                                          {"average", r.report->average},
                                          {"final_k1", r.final_k1},
                                          {"calibrations", calibrations}};
  }
  io::write_json(dir / "report.json", report);
  return results;
}

// ------------------------------------------------------------ decode bench

BenchGrid BenchGrid::from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("grid config must be a JSON object");
  if (value_or(j, "version", 1) != 1) throw ConfigError("unsupported grid config version");
  BenchGrid g;
  try {
    g.mode = value_or(j, "mode", g.mode);
    if (g.mode != "bits" && g.mode != "render") throw ConfigError("grid mode must be 'bits' or 'render'");
    g.window_bits = list_or(j, "window_bits", g.window_bits);
    g.rows_per_bit = list_or(j, "rows_per_bit", g.rows_per_bit);
    g.roi_diameter_px = list_or(j, "roi_diameter_px", g.roi_diameter_px);
    g.b_ref = list_or(j, "b_ref", g.b_ref);
    g.flip_prob = list_or(j, "flip_prob", g.flip_prob);
    g.pixel_sigma = list_or(j, "pixel_sigma", g.pixel_sigma);
    g.trials = value_or(j, "trials", g.trials);
    g.seed = value_or(j, "seed", g.seed);
    g.frame_rate = value_or(j, "frame_rate", g.frame_rate);
    g.bit_rate = value_or(j, "bit_rate", g.bit_rate);
    g.output = resolve(value_or<std::string>(j, "output", g.output.string()), base_dir);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("grid config: ") + e.what());
  }
  if (g.trials == 0) throw ConfigError("trials must be positive");
  if (g.cells().empty()) throw ConfigError("grid is empty");
  for (auto b : g.b_ref) {
    if (b == 0) throw ConfigError("b_ref must be positive");
  }
  return g;
}

std::vector<BenchCell> BenchGrid::cells() const {
  std::vector<BenchCell> out;
  BenchCell c;
  c.mode = mode;
  c.trials = trials;
  for (auto br : b_ref) {
    for (auto fp : flip_prob) {
      for (auto ps : pixel_sigma) {
        c.b_ref = br;
        c.flip_prob = fp;
        c.pixel_sigma = ps;
        if (mode == "bits") {
          for (auto w : window_bits) {
            c.window_bits = w;
            out.push_back(c);
          }
        } else {
          for (auto rpb : rows_per_bit) {
            for (auto d : roi_diameter_px) {
              c.rows_per_bit = rpb;
              c.roi_diameter_px = d;
              c.window_bits = static_cast<std::size_t>(d / rpb);
              out.push_back(c);
            }
          }
        }
      }
    }
  }
  return out;
}

std::optional<LedId> single_frame_decode(const Bits& raw, const PacketSchema& schema) {
  const FrameBits fb = parse_subpackets(raw, schema);
  std::vector<int> value(schema.id_len(), -1);
  for (const auto& b : fb.bits) {
    int& v = value[b.position];
    if (v >= 0 && v != b.value) return std::nullopt;
    v = b.value;
  }
  Bits id(schema.id_len());
  for (std::size_t i = 0; i < id.size(); ++i) {
    if (value[i] < 0) return std::nullopt;
    id[i] = static_cast<std::uint8_t>(value[i]);
  }
  return LedId(std::move(id));
}

BenchRow run_bench_cell(const BenchCell& cell, std::uint64_t seed, double frame_rate, double bit_rate,
                        const PacketSchema& schema) {
  if (cell.trials == 0) throw ConfigError("trials must be positive");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution id_bit(0.5), flip(cell.flip_prob);
  const std::size_t len = schema.stream_len();
  std::uniform_int_distribution<std::size_t> phase_dist(0, len - 1);
  const auto advance = static_cast<std::size_t>(std::llround(bit_rate / frame_rate));
  const std::size_t budget = default_frame_budget(cell.b_ref, schema.id_len());
  const std::size_t payload_lo = schema.header().size() + schema.flag_width();
  const std::size_t payload_hi = payload_lo + schema.chunk_len();

  // Render-mode geometry: a square sensor just larger than the ROI.
  CameraModel camera;
  LedFixture fixture;
  RoiObservation roi;
  if (cell.mode == "render") {
    const int side = std::max(64, static_cast<int>(std::ceil(cell.roi_diameter_px)) + 24);
    camera.rows = camera.cols = side;
    fixture.bit_rate = bit_rate;
    camera.row_readout_time = 1.0 / (bit_rate * cell.rows_per_bit);
    camera.frame_rate = frame_rate;
    roi.center_px = camera.image_center();
    roi.radius_px = 0.5 * cell.roi_diameter_px;
    roi.valid = true;
  } else if (cell.mode != "bits") {
    throw ConfigError("unknown bench mode '" + cell.mode + "'");
  }

  std::size_t fusion_ok = 0, single_ok = 0, fusion_frames = 0, single_frames = 0, fusion_k = 0, fusion_done = 0;
  for (std::size_t trial = 0; trial < cell.trials; ++trial) {
    Bits id_bits(schema.id_len());
    for (auto& b : id_bits) b = id_bit(rng);
    const LedId id(id_bits);
    const Bits stream = encode_id(id, schema);
    const std::size_t phi0 = phase_dist(rng);
    const std::uint64_t noise_seed = rng();

    std::vector<Bits> frames;
    const auto frame = [&](std::size_t f) -> const Bits& {
      while (frames.size() <= f) {
        const std::size_t n = frames.size();
        const std::size_t start = (phi0 + n * advance) % len;
        Bits raw;
        if (cell.mode == "bits") {
          raw.resize(cell.window_bits);
          for (std::size_t i = 0; i < cell.window_bits; ++i) {
            const std::size_t pos = (start + i) % len;
            const std::size_t in_packet = pos % schema.packet_len();
            raw[i] = stream[pos];
            if (in_packet >= payload_lo && in_packet < payload_hi && flip(rng)) raw[i] ^= 1u;
          }
        } else {
          RenderNoise noise{cell.pixel_sigma, 0, noise_seed + n};
          const FrameImage img = render_frame(camera, fixture, stream, static_cast<double>(start), roi, noise);
          const RoiObservation found = extract_roi(img);
          if (found.valid) raw = demodulate_frame(roi_profile(img.pixels, found), img.rows_per_bit);
        }
        frames.push_back(std::move(raw));
      }
      return frames[f];
    };

    StreamDecoder decoder({schema, cell.b_ref, {}});
    std::size_t used = budget;
    for (std::size_t f = 0; f < budget; ++f) {
      if (auto r = decoder.push_bits(frame(f))) {
        fusion_ok += r->id == id;
        fusion_k += r->frame_interval_k;
        ++fusion_done;
        used = f + 1;
        break;
      }
    }
    fusion_frames += used;

    used = budget;
    for (std::size_t f = 0; f < budget; ++f) {
      if (auto sid = single_frame_decode(frame(f), schema)) {
        single_ok += *sid == id;
        used = f + 1;
        break;
      }
    }
    single_frames += used;
  }

  BenchRow row;
  row.cell = cell;
  const auto n = static_cast<double>(cell.trials);
  row.fusion_accuracy_pct = 100.0 * static_cast<double>(fusion_ok) / n;
  row.fusion_mean_frames = static_cast<double>(fusion_frames) / n;
  row.fusion_mean_k = fusion_done ? static_cast<double>(fusion_k) / static_cast<double>(fusion_done) : 0.0;
  row.fusion_latency_ms = 1000.0 * row.fusion_mean_frames / frame_rate;
  row.single_accuracy_pct = 100.0 * static_cast<double>(single_ok) / n;
  row.single_mean_frames = static_cast<double>(single_frames) / n;
  row.single_latency_ms = 1000.0 * row.single_mean_frames / frame_rate;
  return row;
}

std::vector<BenchRow> decode_bench(const BenchGrid& grid) {
  std::vector<BenchRow> rows;
  std::uint64_t cell_seed = grid.seed;
  for (const auto& cell : grid.cells()) rows.push_back(run_bench_cell(cell, cell_seed++, grid.frame_rate, grid.bit_rate));
  return rows;
}

void write_bench_csv(const fs::path& path, const std::vector<BenchRow>& rows) {
  std::ostringstream out;
  out << "mode,window_bits,rows_per_bit,roi_diameter_px,b_ref,flip_prob,pixel_sigma,trials,"
         "fusion_accuracy_pct,fusion_mean_frames,fusion_mean_k,fusion_latency_ms,"
         "single_accuracy_pct,single_mean_frames,single_latency_ms\n";
  for (const auto& r : rows) {
    const auto& c = r.cell;
    out << c.mode << ',' << c.window_bits << ',' << io::fmt6(c.rows_per_bit) << ',' << io::fmt6(c.roi_diameter_px)
        << ',' << c.b_ref << ',' << io::fmt6(c.flip_prob) << ',' << io::fmt6(c.pixel_sigma) << ',' << c.trials << ','
        << io::fmt6(r.fusion_accuracy_pct) << ',' << io::fmt6(r.fusion_mean_frames) << ','
        << io::fmt6(r.fusion_mean_k) << ',' << io::fmt6(r.fusion_latency_ms) << ','
        << io::fmt6(r.single_accuracy_pct) << ',' << io::fmt6(r.single_mean_frames) << ','
        << io::fmt6(r.single_latency_ms) << '\n';
  }
  io::write_text(path, out.str());
}

// ------------------------------------------------------------------- plots

std::string render_svg(const std::vector<PlotSeries>& trajectories, const std::vector<Pose2D>& reference) {
  static const char* const palette[] = {"#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  const auto grow = [&](const std::vector<Pose2D>& pts) {
    for (const auto& p : pts) {
      xmin = std::min(xmin, p.x()), xmax = std::max(xmax, p.x());
      ymin = std::min(ymin, p.y()), ymax = std::max(ymax, p.y());
    }
  };
  grow(reference);
  for (const auto& s : trajectories) grow(s.points);
  if (xmin > xmax) xmin = ymin = 0, xmax = ymax = 1;
  const double span = std::max({xmax - xmin, ymax - ymin, 1e-6});
  const double width = 800.0, pad = 40.0, scale = (width - 2 * pad) / span;
  const double height = (ymax - ymin) * scale + 2 * pad + 20.0 * static_cast<double>(trajectories.size() + 1);

  char buf[64];
  const auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return std::string(buf);
  };
  const auto polyline = [&](const std::vector<Pose2D>& pts, const std::string& style) {
    std::string s = "  <polyline fill=\"none\" " + style + " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i) s += ' ';
      s += num(pad + (pts[i].x() - xmin) * scale) + ',' + num(pad + (ymax - pts[i].y()) * scale);
    }
    return s + "\"/>\n";
  };

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
                    num(height) + "\">\n  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  double legend_y = (ymax - ymin) * scale + 2 * pad;
  const auto legend = [&](const std::string& label, const std::string& color) {
    svg += "  <text x=\"" + num(pad) + "\" y=\"" + num(legend_y) + "\" font-size=\"14\" fill=\"" + color + "\">" +
           label + "</text>\n";
    legend_y += 20.0;
  };
  if (!reference.empty()) {
    svg += polyline(reference, "stroke=\"black\" stroke-width=\"2\" stroke-dasharray=\"6,4\"");
    legend("reference", "black");
  }
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const std::string color = palette[i % std::size(palette)];
    svg += polyline(trajectories[i].points, "stroke=\"" + color + "\" stroke-width=\"1.5\"");
    legend(trajectories[i].label, color);
  }
  return svg + "</svg>\n";
}

std::vector<fs::path> emit_plots(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
  std::vector<fs::path> dirs{dir};
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin() + 1, dirs.end());

  std::vector<fs::path> written;
  for (const auto& d : dirs) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(d)) {
      const auto name = e.path().filename().string();
      if (e.is_regular_file() && name.starts_with("trajectory_") && name.ends_with(".csv")) files.push_back(e.path());
    }
    if (files.empty()) continue;
    std::sort(files.begin(), files.end());
    std::vector<PlotSeries> series;
    for (const auto& f : files) {
      PlotSeries s;
      s.label = f.stem().string().substr(std::string("trajectory_").size());
      for (const auto& fix : io::read_fixes_csv(f)) s.points.push_back(fix.pose);
      series.push_back(std::move(s));
    }
    const auto out = d / "trajectories.svg";
    io::write_text(out, render_svg(series, io::read_ground_truth_path(d / "ground_truth.csv")));
    written.push_back(out);
  }
  if (written.empty()) throw ConfigError("no trajectory_*.csv files under " + dir.string());
  return written;
}

}  // namespace vlpdr
