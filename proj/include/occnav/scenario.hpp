#pragma once

// Scenario files, run reports and the reproduction recipes behind the CLI.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "occnav/channel_analysis.hpp"
#include "occnav/core_model.hpp"
#include "occnav/io.hpp"
#include "occnav/navigator.hpp"
#include "occnav/optics_ranging.hpp"
#include "occnav/world.hpp"

namespace occnav {

struct ScenarioError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Scenario {
  LedGridConfig grid;
  CameraIntrinsics cam;
  RobotPose start;
  LocationId target;
  CaptureConfig capture;
  NavConfig nav;
  std::uint64_t seed{1};
};

namespace detail {

inline void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ScenarioError(path + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ScenarioError((path.empty() ? key : path + "." + key) + ": unknown field");
  }
}

template <class T>
void read_field(const json& obj, const std::string& path, const char* key, T& dst) {
  if (!obj.contains(key)) return;
  const json& v = obj.at(key);
  const std::string where = path.empty() ? key : path + "." + key;
  try {
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ScenarioError(where + ": expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ScenarioError(where + ": expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ScenarioError(where + ": expected a string");
    }
    dst = v.get<T>();
  } catch (const json::exception& e) {
    throw ScenarioError(where + ": " + e.what());
  }
}

}  // namespace detail

/// Builds a scenario from JSON. Missing fields keep their defaults, unknown
/// fields and wrong types are errors naming the offending field path.
inline Scenario scenario_from_json(const json& j) {
  using detail::check_keys;
  using detail::read_field;
  Scenario s;
  check_keys(j, "", {"grid", "camera", "start", "target", "noise", "capture", "navigation", "seed"});
  if (j.contains("grid")) {
    const json& g = j["grid"];
    check_keys(g, "grid", {"origin", "spacing_a", "nx", "ny", "ceiling_height_hr", "led_diameter"});
    if (g.contains("origin")) {
      const json& o = g["origin"];
      if (!o.is_array() || o.size() != 2 || !o[0].is_number() || !o[1].is_number())
        throw ScenarioError("grid.origin: expected [x, y]");
      s.grid.origin_x = o[0].get<double>();
      s.grid.origin_y = o[1].get<double>();
    }
    read_field(g, "grid", "spacing_a", s.grid.spacing_a);
    read_field(g, "grid", "nx", s.grid.nx);
    read_field(g, "grid", "ny", s.grid.ny);
    read_field(g, "grid", "ceiling_height_hr", s.grid.ceiling_height_hr);
    read_field(g, "grid", "led_diameter", s.grid.led_diameter);
  }
  if (j.contains("camera")) {
    const json& c = j["camera"];
    check_keys(c, "camera", {"focal_length_mm", "sensor_w_mm", "sensor_h_mm", "img_w", "img_h", "fps",
                             "exposure_s", "rotation_deg"});
    read_field(c, "camera", "focal_length_mm", s.cam.focal_length_mm);
    read_field(c, "camera", "sensor_w_mm", s.cam.sensor_w_mm);
    read_field(c, "camera", "sensor_h_mm", s.cam.sensor_h_mm);
    read_field(c, "camera", "img_w", s.cam.img_w);
    read_field(c, "camera", "img_h", s.cam.img_h);
    read_field(c, "camera", "fps", s.cam.fps);
    read_field(c, "camera", "exposure_s", s.cam.exposure_s);
    read_field(c, "camera", "rotation_deg", s.cam.rotation_deg);
  }
  if (j.contains("start")) {
    const json& p = j["start"];
    check_keys(p, "start", {"x", "y", "heading"});
    read_field(p, "start", "x", s.start.x);
    read_field(p, "start", "y", s.start.y);
    read_field(p, "start", "heading", s.start.heading);
  }
  if (!j.contains("target")) throw ScenarioError("target: required field missing");
  {
    int t = 0;
    read_field(j, "", "target", t);
    if (t < 0 || t >= 32) throw ScenarioError("target: must be a 5-bit ID (0..31)");
    s.target = LocationId{static_cast<std::uint8_t>(t)};
  }
  if (j.contains("noise")) {
    const json& n = j["noise"];
    check_keys(n, "noise", {"pixel_sigma", "actuation_sigma", "frame_jitter_s"});
    read_field(n, "noise", "pixel_sigma", s.capture.noise_sigma);
    read_field(n, "noise", "actuation_sigma", s.nav.actuation_sigma);
    read_field(n, "noise", "frame_jitter_s", s.capture.jitter_s);
  }
  if (j.contains("capture")) {
    const json& c = j["capture"];
    check_keys(c, "capture", {"frames", "chip_rate"});
    read_field(c, "capture", "frames", s.capture.frames);
    read_field(c, "capture", "chip_rate", s.capture.chip_rate);
  }
  if (j.contains("navigation")) {
    const json& n = j["navigation"];
    check_keys(n, "navigation", {"arrival_tolerance", "ranging", "step_cap", "speed_cm_s"});
    read_field(n, "navigation", "arrival_tolerance", s.nav.arrival_tolerance);
    read_field(n, "navigation", "step_cap", s.nav.step_cap);
    read_field(n, "navigation", "speed_cm_s", s.nav.speed_cm_s);
    std::string mode = "image_geometry";
    read_field(n, "navigation", "ranging", mode);
    if (mode == "image_geometry") s.nav.ranging = RangingMode::ImageGeometry;
    else if (mode == "area_law") s.nav.ranging = RangingMode::AreaLaw;
    else throw ScenarioError("navigation.ranging: expected \"image_geometry\" or \"area_law\"");
  }
  if (j.contains("seed")) {
    const json& v = j["seed"];
    if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) throw ScenarioError("seed: expected a non-negative integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }

  try {
    s.grid.validate();
  } catch (const DomainError& e) {
    throw ScenarioError(std::string("grid: ") + e.what());
  }
  try {
    s.cam.validate();
  } catch (const DomainError& e) {
    throw ScenarioError(std::string("camera: ") + e.what());
  }
  if (s.target.bits >= s.grid.led_count()) throw ScenarioError("target: outside the configured grid");
  if (s.capture.frames < 1) throw ScenarioError("capture.frames: must be at least 1");
  if (!(s.capture.chip_rate > 0.0)) throw ScenarioError("capture.chip_rate: must be positive");
  if (s.capture.noise_sigma < 0.0) throw ScenarioError("noise.pixel_sigma: must be non-negative");
  if (s.capture.jitter_s < 0.0) throw ScenarioError("noise.frame_jitter_s: must be non-negative");
  if (s.nav.actuation_sigma < 0.0) throw ScenarioError("noise.actuation_sigma: must be non-negative");
  if (!(s.nav.arrival_tolerance > 0.0)) throw ScenarioError("navigation.arrival_tolerance: must be positive");
  if (!(s.nav.speed_cm_s > 0.0)) throw ScenarioError("navigation.speed_cm_s: must be positive");
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open scenario " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ScenarioError(path.string() + ": " + e.what());
  }
  return scenario_from_json(j);
}

inline json to_json(const Scenario& s) {
  return {{"grid",
           {{"origin", {s.grid.origin_x, s.grid.origin_y}},
            {"spacing_a", s.grid.spacing_a},
            {"nx", s.grid.nx},
            {"ny", s.grid.ny},
            {"ceiling_height_hr", s.grid.ceiling_height_hr},
            {"led_diameter", s.grid.led_diameter}}},
          {"camera",
           {{"focal_length_mm", s.cam.focal_length_mm},
            {"sensor_w_mm", s.cam.sensor_w_mm},
            {"sensor_h_mm", s.cam.sensor_h_mm},
            {"img_w", s.cam.img_w},
            {"img_h", s.cam.img_h},
            {"fps", s.cam.fps},
            {"exposure_s", s.cam.exposure_s},
            {"rotation_deg", s.cam.rotation_deg}}},
          {"start", {{"x", s.start.x}, {"y", s.start.y}, {"heading", s.start.heading}}},
          {"target", s.target.bits},
          {"noise",
           {{"pixel_sigma", s.capture.noise_sigma},
            {"actuation_sigma", s.nav.actuation_sigma},
            {"frame_jitter_s", s.capture.jitter_s}}},
          {"capture", {{"frames", s.capture.frames}, {"chip_rate", s.capture.chip_rate}}},
          {"navigation",
           {{"arrival_tolerance", s.nav.arrival_tolerance},
            {"ranging", s.nav.ranging == RangingMode::AreaLaw ? "area_law" : "image_geometry"},
            {"step_cap", s.nav.step_cap},
            {"speed_cm_s", s.nav.speed_cm_s}}},
          {"seed", s.seed}};
}

/// Area-law constant for this camera and LED, fitted straight overhead.
inline Calibration overhead_calibration(const LedGridConfig& grid, const CameraIntrinsics& cam) {
  const auto e = project_led({}, cam, {0.0, 0.0, grid.ceiling_height_hr}, grid.led_diameter);
  return Calibration::fit(grid.ceiling_height_hr, e->area_px);
}

inline NavScenario to_nav_scenario(const Scenario& s) {
  NavScenario n;
  n.grid = s.grid;
  n.cam = s.cam;
  n.start = s.start;
  n.target = s.target;
  n.capture = s.capture;
  n.decoder.chip_rate = s.capture.chip_rate;
  n.nav = s.nav;
  if (n.nav.ranging == RangingMode::AreaLaw) n.nav.calibration = overhead_calibration(s.grid, s.cam);
  n.seed = s.seed;
  return n;
}

struct RunReport {
  Scenario scenario;
  std::vector<LogEntry> steps;
  RobotPose final_pose;
  int moves{0};
  double final_error{0.0};
  bool arrived{false};
  std::string failure;
  double sim_time_s{0.0};
};

/// Timing is simulated time, so identical inputs give identical reports.
inline RunReport run_scenario(const Scenario& s) {
  RunReport r;
  r.scenario = s;
  try {
    const NavResult res = run_navigation(to_nav_scenario(s));
    r.steps = res.log;
    r.final_pose = res.final_pose;
    r.moves = res.moves;
    r.final_error = res.final_error;
    r.arrived = true;
  } catch (const NonConvergence& e) {
    r.steps = e.log;
    r.failure = e.what();
    r.final_pose = r.steps.empty() ? s.start : r.steps.back().pose;
    const Vec3 f = floor_position(s.grid, s.target);
    r.final_error = std::hypot(r.final_pose.x - f.x, r.final_pose.y - f.y);
    r.moves = static_cast<int>(r.steps.size());
  }
  r.sim_time_s = r.steps.empty() ? 0.0 : r.steps.back().time_s;
  return r;
}

inline json to_json(const RunReport& r) {
  json steps = json::array();
  for (const auto& e : r.steps) steps.push_back(to_json(e));
  return {{"scenario", to_json(r.scenario)},
          {"steps", steps},
          {"final_pose", {{"x", r.final_pose.x}, {"y", r.final_pose.y}, {"heading", r.final_pose.heading}}},
          {"moves", r.moves},
          {"final_error_cm", r.final_error},
          {"arrived", r.arrived},
          {"failure", r.failure},
          {"sim_time_s", r.sim_time_s}};
}

inline std::string trajectory_csv(const RunReport& r) {
  std::ostringstream out;
  out << "step,time_s,x_cm,y_cm,heading_rad,action,branch,led,distance_cm,grid_distance\n";
  for (const auto& e : r.steps)
    out << e.step << ',' << e.time_s << ',' << e.pose.x << ',' << e.pose.y << ',' << e.pose.heading << ','
        << to_string(e.action.kind) << ',' << to_string(e.action.branch) << ',' << int(e.action.led.bits) << ','
        << e.action.distance_s << ',' << e.grid_distance << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Table 1

struct Table1Row {
  double offset{0.0};
  double fixture_measured{0.0};
  double actual{0.0};
  double corrected{0.0};      // ellipse-corrected range from the fixture detection
  double sim_area{0.0};       // simulated detection at the same offset
  double sim_range{0.0};      // area law, calibrated at offset 0
  double sim_true_d{0.0};
  bool within{false};
};

struct Table1Report {
  std::vector<Table1Row> rows;
  bool fixture_area_monotone{false};
  bool sim_area_monotone{false};
  bool headline_ok{false};  // |corrected - actual| <= 2 cm at 100 cm
  std::vector<std::string> failures;
  bool pass() const { return failures.empty(); }
};

inline constexpr double kTable1Tolerance = 0.5;
inline constexpr double kTable1Headline = 2.0;

/// Single LED at h = 255.5 cm, camera moved 0..100 cm away from its floor
/// point. The fixture rows go through the ellipse correction; the simulator
/// renders the same geometry and its detections are reported alongside.
inline Table1Report reproduce_table1(const RadiusCorrectionTable& table, const CameraIntrinsics& cam = {},
                                     std::uint64_t seed = 1) {
  constexpr double kHeight = 255.5;
  constexpr double kDiameter = 9.5;
  Table1Report rep;
  CaptureConfig cap;
  Calibration cal;
  bool fixture_mono = true, sim_mono = true;
  for (std::size_t k = 0; k < table.rows().size(); ++k) {
    const auto& fr = table.rows()[k];
    Table1Row row;
    row.offset = fr.horizontal;
    row.fixture_measured = fr.measured_d;
    row.actual = fr.actual_d;
    row.corrected = ellipse_corrected_distance(fr.area_px, fr.major_r, fr.minor_r, table);
    row.within = std::abs(row.corrected - row.fixture_measured) <= kTable1Tolerance;
    if (!row.within)
      rep.failures.push_back("offset " + std::to_string(fr.horizontal) + ": corrected " +
                             std::to_string(row.corrected) + " vs " + std::to_string(fr.measured_d));

    const RobotPose pose{fr.horizontal, 0.0, 0.0};
    const auto e = project_led(pose, cam, {0.0, 0.0, kHeight}, kDiameter);
    std::vector<SceneLed> scene{{*e, Waveform(encode_id(0), cap.chip_rate)}};
    const auto frames = capture_burst(scene, cam, 0.0, cap, seed + k);
    const auto blobs = detect_rois(max_projection(frames));
    if (!blobs.empty()) {
      row.sim_area = blobs.front().area_px;
      if (k == 0) cal = Calibration::fit(kHeight, row.sim_area);
      row.sim_range = direct_distance(row.sim_area, cal);
    }
    row.sim_true_d = e->direct_distance;
    if (k > 0) {
      if (fr.area_px > table.rows()[k - 1].area_px) fixture_mono = false;
      if (row.sim_area > rep.rows.back().sim_area) sim_mono = false;
    }
    rep.rows.push_back(row);
  }
  rep.fixture_area_monotone = fixture_mono;
  rep.sim_area_monotone = sim_mono;
  if (!fixture_mono) rep.failures.push_back("detected area increases with offset");
  const auto last = std::find_if(rep.rows.begin(), rep.rows.end(), [](const Table1Row& r) { return r.offset == 100.0; });
  rep.headline_ok = last != rep.rows.end() && std::abs(last->corrected - last->actual) <= kTable1Headline;
  if (!rep.headline_ok) rep.failures.push_back("error at the 100 cm offset exceeds 2 cm");
  return rep;
}

inline std::string table1_csv(const Table1Report& r) {
  std::ostringstream out;
  out << "offset_cm,fixture_measured_cm,actual_cm,corrected_cm,accuracy_pct,sim_area_px,sim_range_cm,sim_true_cm,"
         "within_tolerance\n";
  for (const auto& row : r.rows)
    out << row.offset << ',' << row.fixture_measured << ',' << row.actual << ',' << row.corrected << ','
        << accuracy_percent(row.corrected, row.actual) << ',' << row.sim_area << ',' << row.sim_range << ','
        << row.sim_true_d << ',' << (row.within ? 1 : 0) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepReport {
  std::vector<AccuracyRow> accuracy;
  std::vector<MultiLedSweep> multi_led;  // a = 50 and 100, n = 1..4
  std::vector<MfskErrorPoint> ber;
  std::vector<std::string> failures;
  bool pass() const { return failures.empty(); }
};

inline SweepReport reproduce_sweeps(const RadiusCorrectionTable& table, const CameraIntrinsics& cam = {}) {
  SweepReport rep;
  rep.accuracy = accuracy_report(table);
  if (rep.accuracy.empty() || std::abs(rep.accuracy.front().accuracy - 100.0) > 1e-9)
    rep.failures.push_back("accuracy at offset 0 is not 100%");
  for (std::size_t k = 1; k < rep.accuracy.size(); ++k)
    if (rep.accuracy[k].accuracy > rep.accuracy[k - 1].accuracy + 1e-9)
      rep.failures.push_back("accuracy rises at offset " + std::to_string(rep.accuracy[k].horizontal));

  for (double a : {50.0, 100.0}) {
    for (int n = 1; n <= 4; ++n) rep.multi_led.push_back(multi_led_error_sweep(cam, 256.0, a, n));
    const auto* two = &rep.multi_led[rep.multi_led.size() - 3];
    const auto* four = &rep.multi_led.back();
    for (std::size_t k = 0; k < four->points.size(); ++k)
      if (four->points[k].mean_error < two->points[k].mean_error)
        rep.failures.push_back("a=" + std::to_string(a) + ": 4-LED error below 2-LED error at offset " +
                               std::to_string(four->points[k].horizontal));
  }

  const std::vector<int> orders{2, 4, 8};
  rep.ber = ber_sweep(orders, -10.0, 20.0, 1.0);
  for (std::size_t k = 0; k + 2 < rep.ber.size(); k += 3)
    if (!(rep.ber[k + 2].p_bit < rep.ber[k + 1].p_bit && rep.ber[k + 1].p_bit < rep.ber[k].p_bit))
      rep.failures.push_back("BER ordering across M breaks at " + std::to_string(rep.ber[k].snr_db) + " dB");
  return rep;
}

inline void write_text(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out << s;
}

inline std::string accuracy_csv(const std::vector<AccuracyRow>& rows) {
  std::ostringstream out;
  out << "offset_cm,measured_cm,actual_cm,accuracy_pct\n";
  for (const auto& r : rows) out << r.horizontal << ',' << r.measured << ',' << r.actual << ',' << r.accuracy << '\n';
  return out.str();
}

inline std::string multi_led_csv(const std::vector<MultiLedSweep>& sweeps) {
  std::ostringstream out;
  out << "spacing_cm,n_leds,offset_cm,mean_error_cm\n";
  for (const auto& s : sweeps)
    for (const auto& p : s.points) out << s.spacing << ',' << s.n_leds << ',' << p.horizontal << ',' << p.mean_error << '\n';
  return out.str();
}

inline std::string ber_csv(const std::vector<MfskErrorPoint>& pts) {
  std::ostringstream out;
  out.precision(10);
  out << "snr_db,M,rho_linear,p_symbol,p_bit\n";
  for (const auto& p : pts) out << p.snr_db << ',' << p.m << ',' << p.rho << ',' << p.p_symbol << ',' << p.p_bit << '\n';
  return out.str();
}

inline void write_sweeps(const SweepReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_text(dir / "accuracy_vs_offset.csv", accuracy_csv(rep.accuracy));
  write_text(dir / "error_vs_led_count.csv", multi_led_csv(rep.multi_led));
  write_text(dir / "mfsk_ber.csv", ber_csv(rep.ber));
}

}  // namespace occnav
