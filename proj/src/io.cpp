#include "vlpdr/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace vlpdr::io {

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  return in;
}

double to_double(const std::string& s, const fs::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError(path.string() + ": '" + s + "' is not a number");
  }
}

/// Reads a CSV with the expected header; returns the data rows.
std::vector<std::vector<std::string>> read_csv(const fs::path& path, const std::vector<std::string>& header) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != header) {
    throw SchemaError(path.string() + ": unexpected CSV header");
  }
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != header.size()) throw SchemaError(path.string() + ": wrong column count");
    rows.push_back(std::move(cells));
  }
  return rows;
}

template <typename T>
T value_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

Pose2D pose_from(const json& j) {
  if (!j.is_array() || j.size() != 2) throw SchemaError("a point must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

json read_json(const fs::path& path) {
  auto in = open_in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) { open_out(path) << j.dump(2) << '\n'; }

void write_text(const fs::path& path, const std::string& text) { open_out(path) << text; }

std::vector<LedFixture> fixtures_from_json(const json& j, std::size_t id_bits) {
  if (!j.is_array()) throw SchemaError("fixture database must be a JSON array");
  std::vector<LedFixture> out;
  FixtureDb seen;  // rejects duplicate IDs
  try {
    for (const auto& e : j) {
      LedFixture f;
      f.id = LedId::from_hex(e.at("id_hex").get<std::string>(), id_bits);
      f.world_xy = {e.at("x_m").get<double>(), e.at("y_m").get<double>()};
      f.mount_height = value_or(e, "height_m", f.mount_height);
      f.radius = value_or(e, "radius_m", f.radius);
      f.bit_rate = value_or(e, "bit_rate", f.bit_rate);
      seen.add(f);
      out.push_back(f);
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("fixture database: ") + e.what());
  }
  return out;
}

json fixtures_to_json(const std::vector<LedFixture>& fixtures) {
  json out = json::array();
  for (const auto& f : fixtures) {
    out.push_back({{"id_hex", f.id.hex()},
                   {"x_m", f.world_xy.x()},
                   {"y_m", f.world_xy.y()},
                   {"height_m", f.mount_height},
                   {"radius_m", f.radius},
                   {"bit_rate", f.bit_rate}});
  }
  return out;
}

FixtureDb fixture_db_from_json(const json& j, std::size_t id_bits) {
  FixtureDb db;
  for (const auto& f : fixtures_from_json(j, id_bits)) db.add(f);
  return db;
}

json fixture_db_to_json(const FixtureDb& db) { return fixtures_to_json(db.fixtures()); }

FixtureDb read_fixture_db(const fs::path& path, std::size_t id_bits) {
  return fixture_db_from_json(read_json(path), id_bits);
}

void write_fixture_db(const fs::path& path, const FixtureDb& db) { write_json(path, fixture_db_to_json(db)); }

static const std::vector<std::string> kImuHeader{"t", "ax", "ay", "az", "mx", "my", "mz"};

void write_imu_csv(const fs::path& path, const std::vector<ImuSample>& imu) {
  auto out = open_out(path);
  out << "t,ax,ay,az,mx,my,mz\n";
  for (const auto& s : imu) {
    out << fmt6(s.t);
    for (int k = 0; k < 3; ++k) out << ',' << fmt6(s.accel[k]);
    for (int k = 0; k < 3; ++k) out << ',' << fmt6(s.mag[k]);
    out << '\n';
  }
}

std::vector<ImuSample> read_imu_csv(const fs::path& path) {
  std::vector<ImuSample> out;
  for (const auto& row : read_csv(path, kImuHeader)) {
    ImuSample s;
    s.t = to_double(row[0], path);
    for (int k = 0; k < 3; ++k) {
      s.accel[k] = to_double(row[1 + k], path);
      s.mag[k] = to_double(row[4 + k], path);
    }
    out.push_back(s);
  }
  return out;
}

void write_imu_jsonl(const fs::path& path, const std::vector<ImuSample>& imu) {
  auto out = open_out(path);
  for (const auto& s : imu) {
    const json j{{"t", s.t},         {"ax", s.accel.x()}, {"ay", s.accel.y()}, {"az", s.accel.z()},
                 {"mx", s.mag.x()}, {"my", s.mag.y()},     {"mz", s.mag.z()}};
    out << j.dump() << '\n';
  }
}

std::vector<ImuSample> read_imu_jsonl(const fs::path& path) {
  auto in = open_in(path);
  std::vector<ImuSample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      ImuSample s;
      s.t = j.at("t").get<double>();
      s.accel = {j.at("ax").get<double>(), j.at("ay").get<double>(), j.at("az").get<double>()};
      s.mag = {j.at("mx").get<double>(), j.at("my").get<double>(), j.at("mz").get<double>()};
      out.push_back(s);
    } catch (const json::exception& e) {
      throw SchemaError(path.string() + ": " + e.what());
    }
  }
  return out;
}

void write_steps_csv(const fs::path& path, const std::vector<StepRow>& rows) {
  auto out = open_out(path);
  out << "t,a_zmax,a_zmin,step_freq,length,alpha\n";
  for (const auto& r : rows) {
    out << fmt6(r.event.t) << ',' << fmt6(r.event.a_zmax) << ',' << fmt6(r.event.a_zmin) << ','
        << fmt6(r.event.step_freq) << ',' << fmt6(r.length) << ',' << fmt6(r.alpha) << '\n';
  }
}

void write_fixes_csv(const fs::path& path, const std::vector<PositionFix>& fixes) {
  auto out = open_out(path);
  out << "t,x,y,source\n";
  for (const auto& f : fixes) {
    out << fmt6(f.t) << ',' << fmt6(f.pose.x()) << ',' << fmt6(f.pose.y()) << ','
        << (f.source == FixSource::Proximity ? "proximity" : "dead_reckoned") << '\n';
  }
}

std::vector<PositionFix> read_fixes_csv(const fs::path& path) {
  std::vector<PositionFix> out;
  for (const auto& row : read_csv(path, {"t", "x", "y", "source"})) {
    PositionFix f;
    f.t = to_double(row[0], path);
    f.pose = {to_double(row[1], path), to_double(row[2], path)};
    if (row[3] == "proximity") {
      f.source = FixSource::Proximity;
    } else if (row[3] == "dead_reckoned") {
      f.source = FixSource::DeadReckoned;
    } else {
      throw SchemaError(path.string() + ": unknown fix source '" + row[3] + "'");
    }
    out.push_back(f);
  }
  return out;
}

void write_decode_report(const fs::path& path, const std::vector<DecodeEvent>& events) {
  auto out = open_out(path);
  out << "frame_index,k,b_cnt,id_hex,status\n";
  for (const auto& e : events) {
    out << e.frame_index << ',' << e.k << ',' << e.b_cnt << ',' << e.id_hex << ',' << e.status << '\n';
  }
}

void write_bitstreams(const fs::path& path, const std::vector<Bits>& streams) {
  auto out = open_out(path);
  for (const auto& b : streams) out << bits_to_string(b) << '\n';
}

std::vector<Bits> read_bitstreams(const fs::path& path) {
  auto in = open_in(path);
  std::vector<Bits> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of("01") != std::string::npos) {
      throw SchemaError(path.string() + ": bitstream lines may only contain 0 and 1");
    }
    out.push_back(bits_from_string(line));
  }
  return out;
}

void write_ground_truth_csv(const fs::path& path, const GroundTruth& truth) {
  auto out = open_out(path);
  out << "step,t,x,y,alpha,length\n";
  out << 0 << ',' << fmt6(truth.timeline.step_start.empty() ? 0.0 : truth.timeline.step_start.front()) << ','
      << fmt6(truth.start.x()) << ',' << fmt6(truth.start.y()) << ','
      << fmt6(truth.headings.empty() ? 0.0 : truth.headings.front()) << ',' << fmt6(0.0) << '\n';
  for (std::size_t n = 0; n < truth.step_positions.size(); ++n) {
    out << n + 1 << ',' << fmt6(truth.step_times[n]) << ',' << fmt6(truth.step_positions[n].x()) << ','
        << fmt6(truth.step_positions[n].y()) << ',' << fmt6(truth.headings[n]) << ','
        << fmt6(truth.step_lengths[n]) << '\n';
  }
}

std::vector<Pose2D> read_ground_truth_path(const fs::path& path) {
  std::vector<Pose2D> out;
  if (!fs::exists(path)) return out;
  for (const auto& row : read_csv(path, {"step", "t", "x", "y", "alpha", "length"})) {
    out.emplace_back(to_double(row[2], path), to_double(row[3], path));
  }
  return out;
}

void write_roi_csv(const fs::path& path, const std::vector<FrameRecord>& frames) {
  auto out = open_out(path);
  out << "frame_index,t,fixture_index,center_x,center_y,radius_px,clipped,phone_x,phone_y\n";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    const auto& roi = f.image.truth_roi;
    out << i << ',' << fmt6(f.image.timestamp) << ',' << f.fixture_index << ',' << fmt6(roi.center_px.x()) << ','
        << fmt6(roi.center_px.y()) << ',' << fmt6(roi.radius_px) << ',' << (roi.clipped ? 1 : 0) << ','
        << fmt6(f.phone_xy.x()) << ',' << fmt6(f.phone_xy.y()) << '\n';
  }
}

SimScenario scenario_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw SchemaError("scenario must be a JSON object");
  if (value_or(j, "version", 1) != 1) throw SchemaError("unsupported scenario version");
  try {
    SimScenario sc;
    if (j.contains("reference")) {
      const auto i = j.at("reference").get<int>();
      const auto refs = make_reference_scenarios(value_or<std::uint64_t>(j, "reference_seed", 2024));
      if (i < 0 || i >= static_cast<int>(refs.size())) throw SchemaError("reference index out of range");
      sc = refs[static_cast<std::size_t>(i)];
    } else {
      sc.fixtures.clear();
    }
    sc.name = value_or(j, "name", sc.name);
    sc.seed = value_or(j, "seed", sc.seed);

    if (j.contains("schema")) {
      const auto& s = j.at("schema");
      sc.schema = PacketSchema(bits_from_string(value_or<std::string>(s, "header", "011110")),
                               value_or<std::size_t>(s, "flag_width", 1), value_or<std::size_t>(s, "chunk_len", 10),
                               value_or<std::size_t>(s, "num_chunks", 2));
    }

    if (j.contains("route")) {
      const auto& r = j.at("route");
      if (r.contains("rectangle")) {
        const auto& wh = r.at("rectangle");
        sc.route = RouteSpec::rectangle(wh.at(0).get<double>(), wh.at(1).get<double>(), 1);
      } else {
        sc.route.waypoints.clear();
        for (const auto& p : r.at("waypoints")) sc.route.waypoints.push_back(pose_from(p));
        sc.route.closed = value_or(r, "closed", true);
      }
      sc.route.laps = value_or(r, "laps", 3);
    }

    if (j.contains("gait")) {
      const auto& g = j.at("gait");
      const double speed = g.at("speed").get<double>();
      sc.gait = GaitProfile::from_speed(speed);
      if (g.contains("step_length")) {
        sc.gait.true_step_length = g.at("step_length").get<double>();
        sc.gait.step_freq = value_or(g, "step_freq", speed / sc.gait.true_step_length);
      }
    }

    if (j.contains("fixtures_file")) {
      fs::path p = j.at("fixtures_file").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      sc.fixtures = fixtures_from_json(read_json(p), sc.schema.id_len());
    } else if (j.contains("fixtures")) {
      const auto& f = j.at("fixtures");
      sc.fixtures = f.is_string() && f.get<std::string>() == "reference"
                        ? reference_fixtures(sc.route, sc.seed)
                        : fixtures_from_json(f, sc.schema.id_len());
    }

    if (j.contains("camera")) {
      const auto& c = j.at("camera");
      sc.camera.rows = value_or(c, "rows", sc.camera.rows);
      sc.camera.cols = value_or(c, "cols", sc.camera.cols);
      sc.camera.row_readout_time = value_or(c, "row_readout_time", sc.camera.row_readout_time);
      sc.camera.frame_rate = value_or(c, "frame_rate", sc.camera.frame_rate);
      sc.camera.focal_scale = value_or(c, "focal_scale", sc.camera.focal_scale);
    }

    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      sc.noise.imu_sigma = value_or(n, "imu_sigma", sc.noise.imu_sigma);
      sc.noise.mag_sigma = value_or(n, "mag_sigma", sc.noise.mag_sigma);
      sc.noise.pixel_sigma = value_or(n, "pixel_sigma", sc.noise.pixel_sigma);
      sc.noise.speed_jitter = value_or(n, "speed_jitter", sc.noise.speed_jitter);
      if (n.contains("heading_bias_deg")) {
        sc.noise.heading_bias = n.at("heading_bias_deg").get<double>() * std::numbers::pi / 180.0;
      }
      if (n.contains("hard_iron")) {
        const auto& h = n.at("hard_iron");
        sc.noise.hard_iron = {h.at(0).get<double>(), h.at(1).get<double>(), h.at(2).get<double>()};
      }
    }

    sc.oracle_k1 = value_or(j, "oracle_k1", sc.oracle_k1);
    sc.arm_length = value_or(j, "arm_length", sc.arm_length);
    sc.stand_time = value_or(j, "stand_time", sc.stand_time);
    sc.sample_rate = value_or(j, "sample_rate", sc.sample_rate);
    sc.validate();
    return sc;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("scenario: ") + e.what());
  }
}

json scenario_to_json(const SimScenario& sc) {
  json route{{"closed", sc.route.closed}, {"laps", sc.route.laps}, {"waypoints", json::array()}};
  for (const auto& p : sc.route.waypoints) route["waypoints"].push_back({p.x(), p.y()});
  return {
      {"version", 1},
      {"name", sc.name},
      {"seed", sc.seed},
      {"schema",
       {{"header", bits_to_string(sc.schema.header())},
        {"flag_width", sc.schema.flag_width()},
        {"chunk_len", sc.schema.chunk_len()},
        {"num_chunks", sc.schema.num_chunks()}}},
      {"route", route},
      {"gait", {{"speed", sc.gait.speed}, {"step_length", sc.gait.true_step_length}, {"step_freq", sc.gait.step_freq}}},
      {"fixtures", fixtures_to_json(sc.fixtures)},
      {"camera",
       {{"rows", sc.camera.rows},
        {"cols", sc.camera.cols},
        {"row_readout_time", sc.camera.row_readout_time},
        {"frame_rate", sc.camera.frame_rate},
        {"focal_scale", sc.camera.focal_scale}}},
      {"noise",
       {{"imu_sigma", sc.noise.imu_sigma},
        {"mag_sigma", sc.noise.mag_sigma},
        {"pixel_sigma", sc.noise.pixel_sigma},
        {"speed_jitter", sc.noise.speed_jitter},
        {"heading_bias_deg", sc.noise.heading_bias * 180.0 / std::numbers::pi},
        {"hard_iron", {sc.noise.hard_iron.x(), sc.noise.hard_iron.y(), sc.noise.hard_iron.z()}}}},
      {"oracle_k1", sc.oracle_k1},
      {"arm_length", sc.arm_length},
      {"stand_time", sc.stand_time},
      {"sample_rate", sc.sample_rate},
  };
}

SimScenario read_scenario(const fs::path& path) {
  return scenario_from_json(read_json(path), path.parent_path());
}

}  // namespace vlpdr::io
