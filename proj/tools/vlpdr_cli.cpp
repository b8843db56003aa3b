// vlpdr: simulate walks, run localization, benchmark decoding, plot results.
//
// Failures exit nonzero and print one JSON line to stderr:
//   {"error":"<kind>","message":"<text>"}

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vlpdr/harness.hpp"
#include "vlpdr/io.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << std::endl;
  return code;
}

void simulate(const fs::path& scenario_path, fs::path out, std::size_t export_frames, bool jsonl) {
  const vlpdr::SimScenario sc = vlpdr::io::read_scenario(scenario_path);
  if (out.empty()) out = fs::path("sim_" + sc.name);
  const auto [log, truth] = vlpdr::synth_walk(sc);

  fs::create_directories(out);
  if (jsonl) {
    vlpdr::io::write_imu_jsonl(out / "imu.jsonl", log.imu);
  } else {
    vlpdr::io::write_imu_csv(out / "imu.csv", log.imu);
  }
  vlpdr::io::write_ground_truth_csv(out / "ground_truth.csv", truth);
  vlpdr::io::write_json(out / "scenario.json", vlpdr::io::scenario_to_json(sc));

  vlpdr::FixtureDb db;
  std::vector<vlpdr::Bits> streams;
  for (const auto& f : sc.fixtures) {
    db.add(f);
    streams.push_back(vlpdr::encode_id(f.id, sc.schema));
  }
  vlpdr::io::write_fixture_db(out / "fixtures.json", db);
  vlpdr::io::write_bitstreams(out / "bitstreams.txt", streams);

  vlpdr::io::write_roi_csv(out / "frames.csv", log.frames);
  const std::size_t n = std::min(export_frames, log.frames.size());
  if (n > 0) {
    fs::create_directories(out / "frames");
    for (std::size_t i = 0; i < n; ++i) {
      char name[32];
      std::snprintf(name, sizeof name, "frame_%05zu.pgm", i);
      vlpdr::write_pgm((out / "frames" / name).string(), log.frames[i].image.pixels);
    }
  }
  std::cout << json{{"output", out.string()},
                    {"steps", truth.step_positions.size()},
                    {"imu_samples", log.imu.size()},
                    {"frames", log.frames.size()},
                    {"exported_frames", n}}
                   .dump()
            << '\n';
}

void localize(const fs::path& run_path) {
  const auto config = vlpdr::RunConfig::from_json(vlpdr::io::read_json(run_path), run_path.parent_path());
  const auto results = vlpdr::run_localize(config);
  json summary{{"output", config.output_dir.string()}, {"modes", json::object()}};
  for (const auto& r : results) {
    summary["modes"][vlpdr::to_string(r.mode)] = {{"round_errors", r.report->round_errors},
                                                  {"average", r.report->average},
                                                  {"final_k1", r.final_k1}};
  }
  std::cout << summary.dump() << '\n';
}

void decode_bench(const fs::path& grid_path, const fs::path& out) {
  auto grid = vlpdr::BenchGrid::from_json(vlpdr::io::read_json(grid_path), grid_path.parent_path());
  if (!out.empty()) grid.output = out;
  const auto rows = vlpdr::decode_bench(grid);
  vlpdr::write_bench_csv(grid.output, rows);
  std::cout << json{{"output", grid.output.string()}, {"cells", rows.size()}}.dump() << '\n';
}

void plot(const fs::path& dir) {
  json files = json::array();
  for (const auto& p : vlpdr::emit_plots(dir)) files.push_back(p.string());
  std::cout << json{{"plots", files}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Visible-light positioning with pedestrian dead reckoning"};
  app.require_subcommand(1);

  std::string scenario, run, grid, dir, out;
  std::size_t export_frames = 0;
  bool jsonl = false;

  auto* sim = app.add_subcommand("simulate", "Synthesize a walk and write its sensor log");
  sim->add_option("scenario", scenario, "Scenario JSON")->required();
  sim->add_option("-o,--output", out, "Output directory (default sim_<name>)");
  sim->add_option("--export-frames", export_frames, "Write the first N frames as PGM");
  sim->add_flag("--jsonl", jsonl, "Write the IMU log as JSON lines instead of CSV");

  auto* loc = app.add_subcommand("localize", "Run the positioning modes over a simulated walk");
  loc->add_option("run", run, "Run configuration JSON")->required();

  auto* bench = app.add_subcommand("decode-bench", "Multi-frame vs single-frame decoding benchmark");
  bench->add_option("grid", grid, "Grid configuration JSON")->required();
  bench->add_option("-o,--output", out, "CSV path (overrides the grid file)");

  auto* plt = app.add_subcommand("plot", "Render trajectory SVGs for every run directory");
  plt->add_option("dir", dir, "Directory holding trajectory_*.csv files")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage_error", e.what(), 64);
  }

  try {
    if (*sim) simulate(scenario, out, export_frames, jsonl);
    if (*loc) localize(run);
    if (*bench) decode_bench(grid, out);
    if (*plt) plot(dir);
  } catch (const vlpdr::Error& e) {
    return fail(e.kind(), e.what(), 2);
  } catch (const std::exception& e) {
    return fail("internal_error", e.what(), 3);
  }
  return 0;
}
