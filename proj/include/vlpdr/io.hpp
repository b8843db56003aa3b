#pragma once

// File formats: CSV (header row, floats at 6 decimals), JSON fixture
// databases and scenarios, ASCII bitstreams and PGM frames.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "vlpdr/bits.hpp"
#include "vlpdr/occ_codec.hpp"
#include "vlpdr/pdr.hpp"
#include "vlpdr/vlp_fusion.hpp"
#include "vlpdr/walk_sim.hpp"

namespace vlpdr::io {

namespace fs = std::filesystem;
using nlohmann::json;

/// Fixed six-decimal rendering used by every CSV writer.
std::string fmt6(double v);

/// Splits a CSV line on commas (no quoting; none of the formats need it).
std::vector<std::string> split_csv(const std::string& line);

json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& j);
void write_text(const fs::path& path, const std::string& text);

/// Fixture list in file order; duplicate IDs are a SchemaError.
std::vector<LedFixture> fixtures_from_json(const json& j, std::size_t id_bits = 20);
json fixtures_to_json(const std::vector<LedFixture>& fixtures);
FixtureDb fixture_db_from_json(const json& j, std::size_t id_bits = 20);
json fixture_db_to_json(const FixtureDb& db);
FixtureDb read_fixture_db(const fs::path& path, std::size_t id_bits = 20);
void write_fixture_db(const fs::path& path, const FixtureDb& db);

/// IMU samples as `t,ax,ay,az,mx,my,mz`.
void write_imu_csv(const fs::path& path, const std::vector<ImuSample>& imu);
std::vector<ImuSample> read_imu_csv(const fs::path& path);
/// One JSON object per line with the same keys as the CSV columns.
void write_imu_jsonl(const fs::path& path, const std::vector<ImuSample>& imu);
std::vector<ImuSample> read_imu_jsonl(const fs::path& path);

struct StepRow {
  StepEvent event;
  double length = 0.0;
  double alpha = 0.0;
};
void write_steps_csv(const fs::path& path, const std::vector<StepRow>& rows);

void write_fixes_csv(const fs::path& path, const std::vector<PositionFix>& fixes);
std::vector<PositionFix> read_fixes_csv(const fs::path& path);

void write_decode_report(const fs::path& path, const std::vector<DecodeEvent>& events);

/// ASCII '0'/'1', one bitstream per line.
void write_bitstreams(const fs::path& path, const std::vector<Bits>& streams);
std::vector<Bits> read_bitstreams(const fs::path& path);

/// Ground truth per step: `step,t,x,y,alpha,length`.
void write_ground_truth_csv(const fs::path& path, const GroundTruth& truth);
/// Reads the positions back (start point prepended); empty if absent.
std::vector<Pose2D> read_ground_truth_path(const fs::path& path);

/// Sidecar for exported frames: truth ROI of each frame.
void write_roi_csv(const fs::path& path, const std::vector<FrameRecord>& frames);

/// Scenario configuration. Either a full description or
/// `{"reference": i}` selecting one of the reference scenarios, with any
/// field overridable. Relative paths resolve against `base_dir`.
SimScenario scenario_from_json(const json& j, const fs::path& base_dir = {});
json scenario_to_json(const SimScenario& sc);
SimScenario read_scenario(const fs::path& path);

}  // namespace vlpdr::io
