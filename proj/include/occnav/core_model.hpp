#pragma once

// World model shared by every other module: the ceiling LED grid, the
// upward-looking camera and the robot pose on the floor.
//
// Units: world lengths in cm, focal length and sensor size in mm, image
// coordinates in px, time in s.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace occnav {

inline constexpr double kPi = 3.14159265358979323846;

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct Vec3 {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct Cell {
  int i{0};  // column index (x)
  int j{0};  // row index (y)

  friend bool operator==(const Cell&, const Cell&) = default;
};

struct LedGridConfig {
  double origin_x{0.0};
  double origin_y{0.0};
  double spacing_a{50.0};
  int nx{4};
  int ny{8};
  double ceiling_height_hr{256.0};
  double led_diameter{9.5};

  int led_count() const { return nx * ny; }
  double led_radius() const { return led_diameter / 2.0; }
  double led_area() const { return kPi * led_radius() * led_radius(); }

  void validate() const {
    if (!(spacing_a > 0.0) || !(ceiling_height_hr > 0.0) || !(led_diameter > 0.0))
      throw DomainError("grid: all dimensions must be positive");
    if (nx < 0 || ny < 0) throw DomainError("grid: negative grid count");
    if (!(spacing_a > led_diameter))
      throw DomainError("grid: spacing must exceed the LED diameter");
    if (nx * ny > 32) throw DomainError("grid: nx*ny exceeds the 5-bit ID space (32)");
  }
};

struct CameraIntrinsics {
  double focal_length_mm{4.2};
  double sensor_w_mm{6.4};  // along img_w
  double sensor_h_mm{4.8};  // along img_h
  int img_w{800};
  int img_h{600};
  double fps{20.0};
  double exposure_s{1.0 / 8000.0};
  int rotation_deg{270};

  /// Focal length expressed in pixels along the image width.
  double focal_px() const { return focal_length_mm * img_w / sensor_w_mm; }

  /// The sensor reads out along the displayed width: the raw raster has
  /// img_w rows and img_h columns, and the 270 degree view rotation turns
  /// it into the img_w x img_h displayed image with vertical stripes.
  int readout_rows() const { return img_w; }
  int readout_cols() const { return img_h; }
  double frame_period() const { return 1.0 / fps; }
  double row_time() const { return 1.0 / (fps * readout_rows()); }

  void validate() const {
    if (!(focal_length_mm > 0.0)) throw DomainError("camera: focal length must be positive");
    if (!(sensor_w_mm > 0.0) || !(sensor_h_mm > 0.0))
      throw DomainError("camera: sensor dimensions must be positive");
    if (img_w <= 0 || img_h <= 0) throw DomainError("camera: image size must be positive");
    if (!(fps > 0.0)) throw DomainError("camera: fps must be positive");
    if (!(exposure_s > 0.0) || !(exposure_s < 1.0 / fps))
      throw DomainError("camera: exposure must be in (0, 1/fps)");
    if (rotation_deg % 90 != 0) throw DomainError("camera: rotation must be a multiple of 90");
  }
};

struct RobotPose {
  double x{0.0};
  double y{0.0};
  double heading{0.0};  // rad, 0 = robot front along world +y
};

/// 5-bit LED identity. Cells are assigned row-major: i = bits mod nx,
/// j = bits div nx.
struct LocationId {
  std::uint8_t bits{0};

  friend bool operator==(const LocationId&, const LocationId&) = default;
  friend auto operator<=>(const LocationId&, const LocationId&) = default;
};

inline Cell cell_of(const LedGridConfig& grid, LocationId id) {
  if (id.bits >= 32 || static_cast<int>(id.bits) >= grid.led_count())
    throw DomainError("id " + std::to_string(id.bits) + " outside the configured grid");
  return {id.bits % grid.nx, id.bits / grid.nx};
}

inline bool in_grid(const LedGridConfig& grid, Cell c) {
  return c.i >= 0 && c.j >= 0 && c.i < grid.nx && c.j < grid.ny;
}

inline LocationId id_of(const LedGridConfig& grid, Cell c) {
  if (!in_grid(grid, c))
    throw DomainError("cell (" + std::to_string(c.i) + "," + std::to_string(c.j) +
                      ") outside the configured grid");
  return LocationId{static_cast<std::uint8_t>(c.j * grid.nx + c.i)};
}

inline Vec3 led_world_position(const LedGridConfig& grid, Cell c) {
  if (!in_grid(grid, c)) throw DomainError("cell outside the configured grid");
  return {grid.origin_x + c.i * grid.spacing_a, grid.origin_y + c.j * grid.spacing_a,
          grid.ceiling_height_hr};
}

inline Vec3 led_world_position(const LedGridConfig& grid, LocationId id) {
  return led_world_position(grid, cell_of(grid, id));
}

/// Floor point directly below an LED.
inline Vec3 floor_position(const LedGridConfig& grid, LocationId id) {
  Vec3 p = led_world_position(grid, id);
  p.z = 0.0;
  return p;
}

/// Grid distance used for waypoint selection.
inline int chebyshev(Cell a, Cell b) {
  return std::max(std::abs(a.i - b.i), std::abs(a.j - b.j));
}

}  // namespace occnav
