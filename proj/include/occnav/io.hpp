#pragma once

// Persistence: PGM frames with JSON sidecars, decode results as JSON and
// the visited-LED log as JSON lines.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "occnav/decoder.hpp"
#include "occnav/navigator.hpp"
#include "occnav/shutter_sim.hpp"

namespace occnav {

using nlohmann::json;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline json to_json(const EllipseProjection& e) {
  return {{"center_px", {e.center_px.x, e.center_px.y}},
          {"major_r", e.major_r},
          {"minor_r", e.minor_r},
          {"minor_axis_angle", e.minor_axis_angle},
          {"area_px", e.area_px},
          {"direct_distance", e.direct_distance},
          {"off_axis_angle", e.off_axis_angle}};
}

inline json frame_sidecar(const FrameScan& f) {
  return {{"width", f.width},         {"height", f.height},     {"capture_t0", f.capture_t0},
          {"row_time", f.row_time},   {"exposure", f.exposure}, {"rotation_deg", f.rotation_deg},
          {"raw_rows", f.raw_rows},   {"raw_cols", f.raw_cols}};
}

inline std::filesystem::path sidecar_path(const std::filesystem::path& pgm) {
  auto p = pgm;
  p.replace_extension(".json");
  return p;
}

/// Binary 8-bit PGM; the sidecar keeps the timing needed to decode it and
/// whatever extra fields the caller adds (ground truth, for instance).
inline void write_pgm(const FrameScan& f, const std::filesystem::path& path, const json& extra = json::object()) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P5\n" << f.width << " " << f.height << "\n255\n";
  std::vector<unsigned char> bytes(f.lum.size());
  for (std::size_t k = 0; k < f.lum.size(); ++k)
    bytes[k] = static_cast<unsigned char>(std::lround(std::clamp(f.lum[k], 0.0f, 1.0f) * 255.0f));
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  json side = frame_sidecar(f);
  side.update(extra);
  std::ofstream(sidecar_path(path)) << side.dump(2) << "\n";
}

inline FrameScan read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  auto token = [&in]() {
    std::string t;
    while (in >> t) {
      if (t[0] != '#') return t;
      std::string rest;
      std::getline(in, rest);
    }
    throw IoError("truncated PGM header");
  };
  if (token() != "P5") throw IoError(path.string() + ": only binary PGM (P5) is supported");
  FrameScan f;
  f.width = std::stoi(token());
  f.height = std::stoi(token());
  const int maxval = std::stoi(token());
  if (maxval != 255) throw IoError(path.string() + ": only 8-bit PGM is supported");
  in.get();
  std::vector<unsigned char> bytes(static_cast<std::size_t>(f.width) * f.height);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) throw IoError(path.string() + ": short pixel data");
  f.lum.resize(bytes.size());
  for (std::size_t k = 0; k < bytes.size(); ++k) f.lum[k] = bytes[k] / 255.0f;

  // timing defaults to the stock camera when no sidecar is present
  const CameraIntrinsics cam;
  f.row_time = cam.row_time();
  f.exposure = cam.exposure_s;
  f.rotation_deg = cam.rotation_deg;
  f.raw_rows = f.rotation_deg % 180 ? f.width : f.height;
  f.raw_cols = f.rotation_deg % 180 ? f.height : f.width;
  if (std::ifstream side(sidecar_path(path)); side) {
    const json j = json::parse(side);
    f.capture_t0 = j.value("capture_t0", 0.0);
    f.row_time = j.value("row_time", f.row_time);
    f.exposure = j.value("exposure", f.exposure);
    f.rotation_deg = j.value("rotation_deg", f.rotation_deg);
    f.raw_rows = j.value("raw_rows", f.raw_rows);
    f.raw_cols = j.value("raw_cols", f.raw_cols);
  }
  return f;
}

inline json to_json(const BlobDetection& b) {
  return {{"center_px", {b.center_px.x, b.center_px.y}},
          {"area_px", b.area_px},
          {"major_r", b.major_r},
          {"minor_r", b.minor_r},
          {"minor_axis_angle", b.minor_axis_angle}};
}

inline json to_json(const FrameDecode& d) {
  json leds = json::array(), failures = json::array();
  for (const auto& l : d.leds) {
    json j = to_json(l.blob);
    j["id"] = l.id.bits;
    j["region"] = to_string(l.region);
    j["chips"] = to_string(l.chips);
    leds.push_back(std::move(j));
  }
  for (const auto& f : d.failures) {
    json j = to_json(f.blob);
    j["region"] = to_string(f.region);
    j["reason"] = f.reason;
    failures.push_back(std::move(j));
  }
  return {{"leds", leds}, {"failures", failures}};
}

inline json to_json(const LogEntry& e) {
  json j = {{"step", e.step},
            {"time_s", e.time_s},
            {"pose", {{"x", e.pose.x}, {"y", e.pose.y}, {"heading", e.pose.heading}}},
            {"ids", e.ids},
            {"action", to_string(e.action.kind)},
            {"branch", to_string(e.action.branch)},
            {"led", e.action.led.bits},
            {"distance_s", e.action.distance_s},
            {"direct_d", e.action.direct_d},
            {"direction", {e.action.direction.x, e.action.direction.y}},
            {"grid_distance", e.grid_distance}};
  if (e.action.orientation)
    j["orientation"] = {{"x", e.action.orientation->x_right ? "right" : "left"},
                        {"y", e.action.orientation->y_front ? "front" : "back"}};
  else
    j["orientation"] = nullptr;
  return j;
}

inline LogEntry log_entry_from_json(const json& j) {
  LogEntry e;
  e.step = j.at("step").get<int>();
  e.time_s = j.at("time_s").get<double>();
  e.pose = {j.at("pose").at("x").get<double>(), j.at("pose").at("y").get<double>(),
            j.at("pose").at("heading").get<double>()};
  e.ids = j.at("ids").get<std::vector<std::uint8_t>>();
  e.action.kind = j.at("action").get<std::string>() == "done" ? ActionKind::Done : ActionKind::MoveToFloorOf;
  const auto branch = j.at("branch").get<std::string>();
  e.action.branch = branch == "target" ? Branch::Target : branch == "waypoint" ? Branch::Waypoint : Branch::Fallback;
  e.action.led = LocationId{j.at("led").get<std::uint8_t>()};
  e.action.distance_s = j.at("distance_s").get<double>();
  e.action.direct_d = j.at("direct_d").get<double>();
  e.action.direction = {j.at("direction")[0].get<double>(), j.at("direction")[1].get<double>()};
  e.grid_distance = j.at("grid_distance").get<int>();
  if (!j.at("orientation").is_null())
    e.action.orientation = AxisOrientation{j["orientation"]["x"] == "right", j["orientation"]["y"] == "front"};
  return e;
}

/// The visited-LED database: one JSON object per line, appended in order.
class VisitedLog {
 public:
  explicit VisitedLog(std::filesystem::path path) : path_(std::move(path)) {}

  void append(const LogEntry& e) const {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw IoError("cannot append to " + path_.string());
    out << to_json(e).dump() << "\n";
  }

  void append_all(const std::vector<LogEntry>& entries) const {
    for (const auto& e : entries) append(e);
  }

  std::vector<LogEntry> read() const {
    std::ifstream in(path_);
    if (!in) throw IoError("cannot read " + path_.string());
    std::vector<LogEntry> out;
    std::string line;
    while (std::getline(in, line))
      if (!line.empty()) out.push_back(log_entry_from_json(json::parse(line)));
    return out;
  }

 private:
  std::filesystem::path path_;
};

}  // namespace occnav
