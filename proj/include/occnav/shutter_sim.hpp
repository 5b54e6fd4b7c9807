#pragma once

// Rolling-shutter camera model. Ceiling LEDs are projected onto the sensor
// as ellipses, and every sensor row integrates the LED waveform over its
// own exposure window, which turns a flickering LED into stripes.

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "occnav/core_model.hpp"
#include "occnav/txcodec.hpp"

namespace occnav {

struct Point2 {
  double x{0.0};
  double y{0.0};
};

/// LED image in displayed-image coordinates (pixel centers at integers).
struct EllipseProjection {
  Point2 center_px;
  double major_r{0.0};
  double minor_r{0.0};
  double minor_axis_angle{0.0};  // rad, direction of the minor (radial) axis
  double area_px{0.0};
  // ground truth carried for sidecars and tests
  double direct_distance{0.0};
  double off_axis_angle{0.0};

  bool contains(double x, double y) const {
    const double dx = x - center_px.x;
    const double dy = y - center_px.y;
    const double c = std::cos(minor_axis_angle);
    const double s = std::sin(minor_axis_angle);
    const double along_minor = dx * c + dy * s;
    const double along_major = -dx * s + dy * c;
    const double q = (along_minor * along_minor) / (minor_r * minor_r) +
                     (along_major * along_major) / (major_r * major_r);
    return q <= 1.0;
  }
};

/// Horizontal offset of a world point in the robot frame: (right, front).
inline Point2 to_robot_frame(const RobotPose& pose, double wx, double wy) {
  const double dx = wx - pose.x;
  const double dy = wy - pose.y;
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  return {dx * c + dy * s, -dx * s + dy * c};
}

/// Inverse of to_robot_frame.
inline Point2 to_world_frame(const RobotPose& pose, double right, double front) {
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  return {pose.x + right * c - front * s, pose.y + right * s + front * c};
}

inline Point2 principal_point(const CameraIntrinsics& cam) {
  return {(cam.img_w - 1) / 2.0, (cam.img_h - 1) / 2.0};
}

/// Projects a ceiling LED for an upward-looking camera. Image right is the
/// robot's right, image up is the robot's front. The LED disc shrinks as
/// f/D and foreshortens by cos(theta) along the radial direction.
/// Returns nullopt when the LED center falls outside the image.
inline std::optional<EllipseProjection> project_led(const RobotPose& pose,
                                                    const CameraIntrinsics& cam,
                                                    const Vec3& led_pos, double led_diameter) {
  const double h = led_pos.z;
  if (!(h > 0.0)) return std::nullopt;
  const Point2 rel = to_robot_frame(pose, led_pos.x, led_pos.y);
  const double fpx = cam.focal_px();
  const Point2 pp = principal_point(cam);

  EllipseProjection e;
  e.center_px = {pp.x + fpx * rel.x / h, pp.y - fpx * rel.y / h};
  if (e.center_px.x < -0.5 || e.center_px.x > cam.img_w - 0.5 || e.center_px.y < -0.5 ||
      e.center_px.y > cam.img_h - 0.5)
    return std::nullopt;

  const double horizontal = std::hypot(rel.x, rel.y);
  const double d = std::hypot(horizontal, h);
  const double cos_theta = h / d;
  e.direct_distance = d;
  e.off_axis_angle = std::acos(cos_theta);
  e.major_r = fpx * (led_diameter / 2.0) / d;
  e.minor_r = e.major_r * cos_theta;
  e.minor_axis_angle = horizontal > 0.0 ? std::atan2(-rel.y, rel.x) : 0.0;
  e.area_px = kPi * e.major_r * e.minor_r;
  return e;
}

/// Luminance raster of one captured frame, row-major, values in [0, 1].
/// raw_rows/raw_cols describe the sensor raster before view rotation; raw
/// row k starts its exposure at capture_t0 + k * row_time.
struct FrameScan {
  int width{0};
  int height{0};
  std::vector<float> lum;
  double capture_t0{0.0};
  double row_time{0.0};
  double exposure{0.0};
  int rotation_deg{0};
  int raw_rows{0};
  int raw_cols{0};

  float at(int x, int y) const { return lum[static_cast<std::size_t>(y) * width + x]; }
  float& at(int x, int y) { return lum[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const FrameScan&, const FrameScan&) = default;
};

/// Maps a pixel through a clockwise rotation of a w x h raster; for 270
/// degrees, (x, y) -> (y, w - 1 - x).
inline std::array<int, 2> rotate_point(int x, int y, int w, int h, int deg) {
  switch (((deg % 360) + 360) % 360) {
    case 0: return {x, y};
    case 90: return {h - 1 - y, x};
    case 180: return {w - 1 - x, h - 1 - y};
    case 270: return {y, w - 1 - x};
    default: throw DomainError("rotation must be one of 0, 90, 180, 270");
  }
}

inline FrameScan apply_rotation(const FrameScan& frame, int deg) {
  const int d = ((deg % 360) + 360) % 360;
  if (d % 90 != 0) throw DomainError("rotation must be one of 0, 90, 180, 270");
  FrameScan out = frame;
  if (d == 90 || d == 270) std::swap(out.width, out.height);
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x) {
      const auto p = rotate_point(x, y, frame.width, frame.height, d);
      out.at(p[0], p[1]) = frame.at(x, y);
    }
  out.rotation_deg = (frame.rotation_deg + d) % 360;
  return out;
}

/// Sensor row (read-out index) that captured a displayed pixel.
inline int readout_row(const FrameScan& frame, int x, int y) {
  if (frame.rotation_deg == 0) return y;
  const auto p = rotate_point(x, y, frame.width, frame.height, 360 - frame.rotation_deg);
  return p[1];
}

/// True when read-out rows run along the displayed x axis (stripes vertical).
inline bool readout_along_x(const FrameScan& frame) {
  return frame.rotation_deg == 90 || frame.rotation_deg == 270;
}

struct SceneLed {
  EllipseProjection ellipse;
  Waveform waveform;
};

struct RenderOptions {
  double noise_sigma{0.0};
  std::uint64_t seed{0};
};

/// Renders the raw (unrotated) sensor raster. Ellipses are given in
/// displayed coordinates, i.e. after cam.rotation_deg is applied.
inline FrameScan render_frame(const std::vector<SceneLed>& scene, const CameraIntrinsics& cam,
                              double t0, const RenderOptions& opt = {}) {
  if (!(cam.exposure_s < cam.frame_period())) throw DomainError("exposure must be below the frame period");
  FrameScan f;
  f.raw_rows = cam.readout_rows();
  f.raw_cols = cam.readout_cols();
  f.width = f.raw_cols;
  f.height = f.raw_rows;
  f.lum.assign(static_cast<std::size_t>(f.width) * f.height, 0.0f);
  f.capture_t0 = t0;
  f.row_time = cam.row_time();
  f.exposure = cam.exposure_s;
  f.rotation_deg = 0;

  const int rot = cam.rotation_deg;
  const int back = (360 - ((rot % 360) + 360) % 360) % 360;
  for (const auto& led : scene) {
    const auto& e = led.ellipse;
    const double reach = e.major_r + 1.0;
    // displayed bounding box, mapped back to the raw raster
    const int dw = (rot % 180 == 0) ? f.width : f.height;
    const int dh = (rot % 180 == 0) ? f.height : f.width;
    const int x0 = std::max(0, static_cast<int>(std::floor(e.center_px.x - reach)));
    const int x1 = std::min(dw - 1, static_cast<int>(std::ceil(e.center_px.x + reach)));
    const int y0 = std::max(0, static_cast<int>(std::floor(e.center_px.y - reach)));
    const int y1 = std::min(dh - 1, static_cast<int>(std::ceil(e.center_px.y + reach)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        if (!e.contains(x, y)) continue;
        const auto raw = rotate_point(x, y, dw, dh, back);
        const double t = t0 + raw[1] * f.row_time;
        float& px = f.at(raw[0], raw[1]);
        px = static_cast<float>(std::min(1.0, px + led.waveform.mean(t, f.exposure)));
      }
  }

  if (opt.noise_sigma > 0.0) {
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> noise(0.0, opt.noise_sigma);
    for (auto& v : f.lum) v = static_cast<float>(std::clamp(v + noise(rng), 0.0, 1.0));
  }
  return f;
}

/// Raw render followed by the camera's fixed view rotation.
inline FrameScan capture_frame(const std::vector<SceneLed>& scene, const CameraIntrinsics& cam,
                               double t0, const RenderOptions& opt = {}) {
  return apply_rotation(render_frame(scene, cam, t0, opt), cam.rotation_deg);
}

}  // namespace occnav
