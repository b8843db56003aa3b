#include "vlpdr/vlp_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vlpdr {

void FixtureDb::add(const LedFixture& fixture) {
  fixture.validate();
  if (!entries_.emplace(fixture.id, fixture).second) {
    throw SchemaError("duplicate fixture id " + fixture.id.hex());
  }
}

const LedFixture& FixtureDb::at(const LedId& id) const {
  if (const auto* f = find(id)) return *f;
  throw DatabaseMiss("no fixture with id " + id.hex());
}

const LedFixture* FixtureDb::find(const LedId& id) const {
  const auto it = entries_.find(id);
  return it == entries_.end() ? nullptr : &it->second;
}

std::vector<LedFixture> FixtureDb::fixtures() const {
  std::vector<LedFixture> out;
  out.reserve(entries_.size());
  for (const auto& [id, f] : entries_) out.push_back(f);
  return out;
}

Pose2D proximity_fix(const LedId& id, const FixtureDb& db) { return db.at(id).world_xy; }

double pixel_distance(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return (a - b).norm(); }

namespace {

const RoiRecord* record_for(const RoiTrack& track, std::size_t step_index) {
  const auto it = std::find_if(track.records.begin(), track.records.end(),
                               [&](const RoiRecord& r) { return r.step_index == step_index; });
  return it == track.records.end() ? nullptr : &*it;
}

double pixel_scale(double radius_px, const LedFixture& fixture, ScaleMode mode) {
  if (!(radius_px > 0)) throw ContractViolation("ROI radius must be positive");
  return mode == ScaleMode::Dimensional ? fixture.radius / radius_px : radius_px / fixture.radius;
}

}  // namespace

double step_displacement(const RoiTrack& track, std::size_t step_index, const LedFixture& fixture, ScaleMode mode) {
  const RoiRecord* cur = record_for(track, step_index);
  const RoiRecord* prev = step_index > 0 ? record_for(track, step_index - 1) : nullptr;
  if (!cur || !prev) {
    throw ContractViolation("no adjacent ROI records for step " + std::to_string(step_index));
  }
  return pixel_scale(cur->radius_px, fixture, mode) * pixel_distance(cur->center_px, prev->center_px);
}

GateResult gated_mean(std::span<const double> displacements, std::span<const double> dalpha, double t_alpha) {
  if (displacements.size() != dalpha.size()) throw ContractViolation("displacement/turn arrays differ in length");
  if (displacements.empty()) throw ContractViolation("no displacements to average");
  if (!(t_alpha > 0)) throw ContractViolation("turn threshold must be positive");
  GateResult out;
  double sum = 0;
  for (std::size_t i = 0; i < displacements.size(); ++i) {
    if (std::abs(dalpha[i]) >= t_alpha) {
      out.discarded.push_back(i);
    } else {
      out.kept.push_back(i);
      sum += displacements[i];
    }
  }
  if (!out.kept.empty()) out.d_av = sum / static_cast<double>(out.kept.size());
  return out;
}

GateResult gate_and_average(RoiTrack& track, double t_alpha, const LedFixture& fixture, ScaleMode mode) {
  std::vector<double> d, turn;
  std::vector<std::size_t> steps;
  for (std::size_t i = 1; i < track.records.size(); ++i) {
    const auto& prev = track.records[i - 1];
    const auto& cur = track.records[i];
    if (cur.step_index != prev.step_index + 1) continue;
    d.push_back(step_displacement(track, cur.step_index, fixture, mode));
    turn.push_back(wrap_pi(cur.alpha - prev.alpha));
    steps.push_back(cur.step_index);
  }
  auto g = gated_mean(d, turn, t_alpha);
  for (auto& i : g.kept) i = steps[i];
  for (auto& i : g.discarded) i = steps[i];
  track.discarded = g.discarded;
  return g;
}

double update_k1(double d_av, double weinberg_root_term) {
  if (!(d_av > 0)) throw ContractViolation("D_av must be positive");
  if (!(weinberg_root_term > 0)) throw SingularCalibration("acceleration extremes are equal");
  return d_av / weinberg_root_term;
}

double update_k1(double d_av, const StepEvent& step) {
  if (step.a_zmax < step.a_zmin) throw ContractViolation("a_zmax must not be below a_zmin");
  return update_k1(d_av, weinberg_root(step));
}

const char* to_string(PositioningMode mode) {
  switch (mode) {
    case PositioningMode::PdrOnly: return "pdr_only";
    case PositioningMode::VlpPdr: return "vlp_pdr";
    case PositioningMode::Calibrated: return "calibrated";
  }
  return "?";
}

PositioningMode positioning_mode_from_string(const std::string& s) {
  if (s == "pdr_only") return PositioningMode::PdrOnly;
  if (s == "vlp_pdr") return PositioningMode::VlpPdr;
  if (s == "calibrated") return PositioningMode::Calibrated;
  throw ConfigError("unknown positioning mode '" + s + "'");
}

HybridPositioner::HybridPositioner(HybridConfig config, FixtureDb db)
    : config_(std::move(config)), db_(std::move(db)), pose_(config_.initial_pose) {
  if (!(config_.k1 > 0)) throw ConfigError("k1 must be positive");
  if (!(config_.t_alpha > 0)) throw ConfigError("t_alpha must be positive");
  state_.k1 = config_.k1;
  state_.t_alpha = config_.t_alpha;
}

PositionFix HybridPositioner::step(const StepEvent& step, HeadingEstimate heading,
                                   const std::optional<VlpObservation>& vlp) {
  const std::size_t index = next_index_++;
  const double length = weinberg_length(step, state_.k1);
  const bool sees_led = config_.mode != PositioningMode::PdrOnly && vlp && vlp->roi.valid;

  if (!sees_led) {
    if (in_pass_) finish_pass();
    pose_ = dead_reckon(pose_, length, heading);
    return {pose_, FixSource::DeadReckoned, step.t};
  }

  if (!in_pass_) {
    in_pass_ = true;
    pass_steps_.clear();
    pass_track_ = {};
    pass_id_.reset();
  }
  const double offset = pixel_distance(vlp->roi.center_px, config_.camera.image_center());
  pass_steps_.push_back({index, step, length, heading.alpha, offset});
  if (!vlp->roi.clipped) {
    pass_track_.records.push_back({index, vlp->roi.center_px, vlp->roi.radius_px, heading.alpha});
  }
  if (vlp->id && !pass_id_) {
    // A decode that matches no fixture is treated as no decode.
    if (db_.find(*vlp->id)) {
      pass_id_ = vlp->id;
    } else {
      ++unknown_ids_;
    }
  }

  if (!pass_id_) {
    pose_ = dead_reckon(pose_, length, heading);
    return {pose_, FixSource::DeadReckoned, step.t};
  }

  const LedFixture& fixture = db_.at(*pass_id_);
  const auto anchor = std::min_element(pass_steps_.begin(), pass_steps_.end(),
                                       [](const PassStep& a, const PassStep& b) { return a.offset_px < b.offset_px; });
  Pose2D p = fixture.world_xy;
  for (auto it = std::next(anchor); it != pass_steps_.end(); ++it) p = dead_reckon<double>(p, it->length, it->alpha);
  pose_ = p;
  return {pose_, FixSource::Proximity, step.t};
}

void HybridPositioner::finish_pass() {
  if (!in_pass_) return;
  in_pass_ = false;
  if (config_.mode != PositioningMode::Calibrated || !pass_id_) return;

  const LedFixture& fixture = db_.at(*pass_id_);
  bool has_pair = false;
  for (std::size_t i = 1; i < pass_track_.records.size(); ++i) {
    has_pair |= pass_track_.records[i].step_index == pass_track_.records[i - 1].step_index + 1;
  }
  if (!has_pair) {
    ++skipped_;
    return;
  }
  const GateResult g = gate_and_average(pass_track_, state_.t_alpha, fixture, config_.scale);
  if (!g.d_av) {
    ++skipped_;
    return;
  }
  double root_sum = 0;
  for (auto n : g.kept) {
    const auto it = std::find_if(pass_steps_.begin(), pass_steps_.end(), [&](const PassStep& s) { return s.index == n; });
    root_sum += weinberg_root(it->event);
  }
  const double mean_root = root_sum / static_cast<double>(g.kept.size());
  if (!(mean_root > 0)) {
    ++skipped_;
    return;
  }
  CalibrationEvent ev;
  ev.step_index = pass_steps_.back().index;
  ev.fixture = *pass_id_;
  ev.d_av = *g.d_av;
  ev.k1_before = state_.k1;
  state_.k1 = update_k1(*g.d_av, mean_root);
  ev.k1_after = state_.k1;
  ev.track = pass_track_;
  state_.last_calibration_step = ev.step_index;
  calibrations_.push_back(std::move(ev));
}

}  // namespace vlpdr
