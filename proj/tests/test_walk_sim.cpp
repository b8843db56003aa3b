#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "vlpdr/walk_sim.hpp"

using namespace vlpdr;

namespace {

SimScenario quiet_scenario(double speed = 1.2) {
  SimScenario sc;
  sc.name = "quiet";
  sc.route = RouteSpec::rectangle(12.0, 6.0, 1);
  sc.gait = GaitProfile::from_speed(speed);
  sc.seed = 5;
  return sc;
}

}  // namespace

TEST_CASE("route geometry") {
  const auto r = RouteSpec::rectangle(12, 6, 3);
  CHECK(r.lap_length() == doctest::Approx(36));
  CHECK(r.point_at(0) == Pose2D(0, 0));
  CHECK(r.point_at(3).isApprox(Pose2D(3, 0)));
  CHECK(r.point_at(15).isApprox(Pose2D(12, 3)));
  CHECK(r.point_at(27).isApprox(Pose2D(3, 6)));
  CHECK(r.point_at(36 + 3).isApprox(Pose2D(3, 0)));

  RouteSpec bad;
  bad.waypoints = {{0, 0}};
  CHECK_THROWS_AS(bad.validate(), ScenarioError);
  bad.waypoints = {{0, 0}, {0, 0}, {1, 0}};
  CHECK_THROWS_AS(bad.validate(), ScenarioError);
}

TEST_CASE("gait law") {
  const auto g = GaitProfile::from_speed(1.2);
  CHECK(g.true_step_length * g.step_freq == doctest::Approx(1.2));
  CHECK(GaitProfile::from_speed(1.6).true_step_length > g.true_step_length);
  GaitProfile bad = g;
  bad.step_freq *= 2;
  CHECK_THROWS_AS(bad.validate(), ScenarioError);
}

TEST_CASE("noiseless walk is self-consistent") {
  const SimScenario sc = quiet_scenario();
  const auto [log, truth] = synth_walk(sc);
  const std::size_t n = truth.step_positions.size();
  REQUIRE(n > 0);
  CHECK(truth.step_lengths.size() == n);
  CHECK(truth.lap_end_steps.size() == 1);
  CHECK(truth.lap_end_steps.back() == n - 1);
  CHECK((truth.step_positions.back() - truth.start).norm() < 1e-9);

  const auto events = detect_steps(log.imu, sc.detector);
  REQUIRE(events.size() == n);
  double path = 0;
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(weinberg_length(events[i], sc.oracle_k1) == doctest::Approx(truth.step_lengths[i]).epsilon(1e-6));
    CHECK(weinberg_root(events[i]) == doctest::Approx(truth.weinberg_roots[i]).epsilon(1e-6));
    path += truth.step_lengths[i];
    // Smoothing moves the peak off the step boundary when neighbouring steps
    // differ in duration, but never by a large fraction of a step.
    CHECK(std::abs(events[i].t - truth.step_times[i]) < 0.1 / sc.gait.step_freq);
  }
  CHECK(path == doctest::Approx(36.0));

  // Level phone, no hard iron: the magnetometer gives the true heading.
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = log.imu[events[i].sample_index];
    const double a = normalize_heading(std::atan2(-s.mag.x(), s.mag.y()));
    CHECK(std::abs(wrap_pi(a - truth.headings[i])) < 1e-9);
  }
  CHECK(log.frames.empty());  // no fixtures
}

TEST_CASE("longer steps need larger vertical swings") {
  double prev = 0;
  for (double speed : {0.9, 1.1, 1.3, 1.5, 1.7}) {
    const auto [log, truth] = synth_walk(quiet_scenario(speed));
    const auto events = detect_steps(log.imu);
    REQUIRE(events.size() > 2);
    const auto& e = events[events.size() / 2];
    const double swing = e.a_zmax * e.a_zmax - e.a_zmin * e.a_zmin;
    CHECK(swing > prev);
    prev = swing;
  }
}

TEST_CASE("determinism") {
  const SimScenario sc = make_reference_scenarios(2024)[3];
  const auto [a, ta] = synth_walk(sc);
  const auto [b, tb] = synth_walk(sc);
  REQUIRE(a.imu.size() == b.imu.size());
  for (std::size_t i = 0; i < a.imu.size(); i += 97) {
    CHECK(a.imu[i].accel == b.imu[i].accel);
    CHECK(a.imu[i].mag == b.imu[i].mag);
  }
  REQUIRE(a.frames.size() == b.frames.size());
  CHECK(a.frames.front().image.pixels == b.frames.front().image.pixels);
  CHECK(ta.step_positions == tb.step_positions);
}

TEST_CASE("reference scenarios") {
  const auto all = make_reference_scenarios(2024);
  REQUIRE(all.size() == 30);
  std::set<std::uint64_t> seeds;
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& sc = all[i];
    CHECK_NOTHROW(sc.validate());
    seeds.insert(sc.seed);
    if (i % 2 == 0) {
      CHECK(sc.gait.speed >= 0.9);
      CHECK(sc.gait.speed <= 1.2);
    } else {
      CHECK(sc.gait.speed >= 1.4);
      CHECK(sc.gait.speed <= 1.7);
    }
    CHECK(sc.route.laps == 3);
    CHECK(sc.route.lap_length() == doctest::Approx(36));
    REQUIRE(sc.fixtures.size() == 3);
    std::set<LedId> ids;
    for (const auto& f : sc.fixtures) {
      ids.insert(f.id);
      CHECK(rotation_unique(f.id, sc.schema));
    }
    CHECK(ids.size() == 3);
    CHECK(sc.noise.hard_iron.norm() >= 1.5 - 1e-12);
    CHECK(sc.noise.hard_iron.norm() <= 3.0 + 1e-12);
  }
  CHECK(seeds.size() == 30);
}

TEST_CASE("a reference walk passes every fixture once per lap") {
  const SimScenario sc = make_reference_scenarios(2024)[0];
  const auto [log, truth] = synth_walk(sc);
  CHECK(truth.lap_end_steps.size() == 3);
  REQUIRE_FALSE(log.frames.empty());
  // Count runs of frames per fixture separated by gaps in time.
  std::size_t passes = 0;
  for (std::size_t i = 0; i < log.frames.size(); ++i) {
    const bool new_run = i == 0 || log.frames[i].fixture_index != log.frames[i - 1].fixture_index ||
                         log.frames[i].image.timestamp - log.frames[i - 1].image.timestamp > 1.5 / sc.camera.frame_rate;
    passes += new_run;
  }
  CHECK(passes == 9);
  for (const auto& f : log.frames) {
    const auto& fx = sc.fixtures[f.fixture_index];
    // Half the image diagonal (400 px) at 2 m with a 500 px focal length.
    CHECK((f.phone_xy - fx.world_xy).norm() < 1.6);
  }
}

TEST_CASE("timeline") {
  const SimScenario sc = quiet_scenario();
  const auto [log, truth] = synth_walk(sc);
  const auto& tl = truth.timeline;
  CHECK(tl.body(0.0) == truth.start);
  CHECK(tl.body(1e6).isApprox(truth.step_positions.back()));
  for (std::size_t i = 0; i < truth.step_positions.size(); i += 7) {
    CHECK((tl.body(tl.step_end[i]) - truth.step_positions[i]).norm() < 1e-9);
  }
  CHECK((tl.phone(0.0) - tl.body(0.0)).norm() == doctest::Approx(sc.arm_length));
}

TEST_CASE("infeasible scenarios are rejected") {
  SimScenario sc = quiet_scenario();
  sc.oracle_k1 = 0;
  CHECK_THROWS_AS(synth_walk(sc), ScenarioError);
  sc = quiet_scenario();
  // Steps faster than the detector's refractory interval cannot be resolved.
  sc.gait = {4.0, 0.5, 8.0};
  CHECK_THROWS_AS(synth_walk(sc), ScenarioError);
}
