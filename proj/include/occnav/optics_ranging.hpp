#pragma once

// Geometry and ranging: field of view, LED-count prediction, photogrammetric
// distance from blob area, the tabulated ellipse correction and the
// horizontal distance to an LED's floor position.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "occnav/core_model.hpp"
#include "occnav/shutter_sim.hpp"

namespace occnav {

struct FovSpec {
  double phi_h{0.0};
  double phi_v{0.0};
};

inline FovSpec fov_angles(const CameraIntrinsics& cam) {
  if (!(cam.focal_length_mm > 0.0)) throw DomainError("focal length must be positive");
  return {2.0 * std::atan(cam.sensor_w_mm / (2.0 * cam.focal_length_mm)),
          2.0 * std::atan(cam.sensor_h_mm / (2.0 * cam.focal_length_mm))};
}

/// Ceiling area seen by the camera, with the full view angle inside the
/// tangent: 4 h^2 tan(phi_v) tan(phi_h).
inline double fov_area(double h_r, double phi_h, double phi_v) {
  if (!(phi_h > 0.0 && phi_h < kPi / 2.0 && phi_v > 0.0 && phi_v < kPi / 2.0))
    throw DomainError("view angle must lie in (0, pi/2) for the tangent form");
  return 4.0 * h_r * h_r * std::tan(phi_v) * std::tan(phi_h);
}

/// Rectangle actually imaged on the ceiling: 4 h^2 tan(phi_v/2) tan(phi_h/2).
inline double fov_footprint_geometric(double h_r, double phi_h, double phi_v) {
  if (!(phi_h > 0.0 && phi_h < kPi && phi_v > 0.0 && phi_v < kPi))
    throw DomainError("view angle must lie in (0, pi)");
  return 4.0 * h_r * h_r * std::tan(phi_v / 2.0) * std::tan(phi_h / 2.0);
}

/// Each LED of a square lattice owns a^2 of ceiling.
inline double expected_led_count(double h_r, double phi_h, double phi_v, double a) {
  if (!(a > 0.0)) throw DomainError("LED spacing must be positive");
  return fov_area(h_r, phi_h, phi_v) / (a * a);
}

inline double expected_led_count_geometric(double h_r, double phi_h, double phi_v, double a) {
  if (!(a > 0.0)) throw DomainError("LED spacing must be positive");
  return fov_footprint_geometric(h_r, phi_h, phi_v) / (a * a);
}

/// Lattice-count slack for a W x H rectangle: |count - WH/a^2| <= W/a + H/a + 1.
inline double lattice_boundary_term(double h_r, const FovSpec& fov, double a) {
  const double w = 2.0 * h_r * std::tan(fov.phi_h / 2.0);
  const double h = 2.0 * h_r * std::tan(fov.phi_v / 2.0);
  return w / a + h / a + 1.0;
}

/// Number of grid LEDs whose image center lands inside the frame. The grid
/// is iterated as given; it is not limited to the 32-ID space here.
inline int brute_force_led_count(const LedGridConfig& grid, const CameraIntrinsics& cam,
                                 const RobotPose& pose) {
  int n = 0;
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const Vec3 p{grid.origin_x + i * grid.spacing_a, grid.origin_y + j * grid.spacing_a,
                   grid.ceiling_height_hr};
      if (project_led(pose, cam, p, grid.led_diameter)) ++n;
    }
  return n;
}

// ---------------------------------------------------------------------------
// Photogrammetric ranging

/// D = K / sqrt(area_px), where K = F * sqrt(A) absorbs the focal length,
/// the LED surface and the pixel pitch.
struct Calibration {
  double k{0.0};

  static Calibration fit(double distance_cm, double area_px) {
    if (!(distance_cm > 0.0) || !(area_px > 0.0)) throw DomainError("calibration needs D > 0 and area > 0");
    return {distance_cm * std::sqrt(area_px)};
  }
};

inline double direct_distance(double area_px, const Calibration& cal) {
  if (!(area_px > 0.0)) throw DomainError("blob area must be positive");
  if (!(cal.k > 0.0)) throw DomainError("calibration constant not fitted");
  return cal.k / std::sqrt(area_px);
}

inline double horizontal_distance(double d, double h) {
  if (!(h > 0.0)) throw DomainError("height must be positive");
  if (d < h) throw DomainError("direct distance shorter than the vertical distance");
  return std::sqrt(d * d - h * h);
}

struct CorrectionRow {
  double horizontal{0.0};  // cm
  double area_px{0.0};
  double major_r{0.0};
  double minor_r{0.0};
  double measured_d{0.0};  // cm
  double actual_d{0.0};    // cm

  /// Sub-pixel minor radius implied by the area of an ellipse: a / (pi r).
  double effective_minor() const { return area_px / (kPi * major_r); }
};

/// Radius-indexed distance lookup. Rows are keyed by the effective minor
/// radius, which shrinks as the camera moves away from the LED's floor
/// position.
class RadiusCorrectionTable {
 public:
  RadiusCorrectionTable() = default;
  explicit RadiusCorrectionTable(std::vector<CorrectionRow> rows) : rows_(std::move(rows)) { validate(); }

  const std::vector<CorrectionRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }

  void validate() const {
    for (std::size_t k = 1; k < rows_.size(); ++k) {
      if (!(rows_[k].horizontal > rows_[k - 1].horizontal))
        throw DomainError("correction table: horizontal distances must increase");
      if (rows_[k].area_px > rows_[k - 1].area_px)
        throw DomainError("correction table: detected area must not increase with distance");
    }
    for (const auto& r : rows_)
      if (!(r.major_r > 0.0) || !(r.area_px > 0.0)) throw DomainError("correction table: bad row");
  }

  /// Distance for a measured effective minor radius: linear interpolation
  /// between bracketing rows, clamped to the first/last row outside.
  double lookup(double key) const {
    if (rows_.empty()) throw DomainError("correction table is empty");
    if (key >= rows_.front().effective_minor()) return rows_.front().measured_d;
    if (key <= rows_.back().effective_minor()) return rows_.back().measured_d;
    for (std::size_t k = 1; k < rows_.size(); ++k) {
      const double k0 = rows_[k - 1].effective_minor(), k1 = rows_[k].effective_minor();
      if (key <= k0 && key >= k1) {
        if (k0 == k1) return rows_[k - 1].measured_d;
        const double t = (k0 - key) / (k0 - k1);
        return rows_[k - 1].measured_d + t * (rows_[k].measured_d - rows_[k - 1].measured_d);
      }
    }
    return rows_.back().measured_d;
  }

  static RadiusCorrectionTable from_csv(std::istream& in);
  static RadiusCorrectionTable from_csv_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DomainError("cannot open correction table " + path);
    return from_csv(f);
  }

 private:
  std::vector<CorrectionRow> rows_;
};

/// CSV columns: horizontal_cm, measured_cm, actual_cm, error_cm, area_px,
/// major_r_px, minor_r_px. Lines starting with '#' and the header are skipped.
inline RadiusCorrectionTable RadiusCorrectionTable::from_csv(std::istream& in) {
  std::vector<CorrectionRow> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::stringstream ss(line);
    std::vector<double> v;
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.size() != 7) throw DomainError("correction table: expected 7 columns in '" + line + "'");
    rows.push_back({v[0], v[4], v[5], v[6], v[1], v[2]});
  }
  return RadiusCorrectionTable(std::move(rows));
}

/// Distance measurement of one LED at eleven floor positions (h = 255.5 cm,
/// 71 cm^2 LED). The first radius was recorded once (11 px) for every row.
inline RadiusCorrectionTable reference_table1() {
  return RadiusCorrectionTable({
      {0, 348, 11, 11, 255.5, 255.5},   {10, 347, 11, 10, 255.88, 255.9},
      {20, 341, 11, 10, 256.65, 256.7}, {30, 337, 11, 10, 257.6, 257.7},
      {40, 336, 11, 10, 258.85, 259.0}, {50, 330, 11, 9, 260.0, 260.2},
      {60, 324, 11, 9, 262.5, 262.8},   {70, 314, 11, 9, 264.3, 264.7},
      {80, 306, 11, 9, 267.1, 267.7},   {90, 298, 11, 8, 269.5, 270.61},
      {100, 288, 11, 8, 272.5, 274.5},
  });
}

inline double ellipse_corrected_distance(double area_px, double major_r, double minor_r,
                                         const RadiusCorrectionTable& table) {
  if (!(minor_r > 0.0) || !(major_r > 0.0) || !(area_px > 0.0))
    throw DomainError("degenerate ellipse");
  return table.lookup(area_px / (kPi * major_r));
}

inline double ellipse_corrected_distance(const EllipseProjection& e, const RadiusCorrectionTable& table) {
  return ellipse_corrected_distance(e.area_px, e.major_r, e.minor_r, table);
}

inline double accuracy_percent(double measured, double actual) {
  return 100.0 * (1.0 - std::abs(measured - actual) / actual);
}

struct AccuracyRow {
  double horizontal{0.0};
  double measured{0.0};
  double actual{0.0};
  double accuracy{0.0};
};

/// Per-row accuracy of the ellipse-corrected range against the actual
/// distance.
inline std::vector<AccuracyRow> accuracy_report(const RadiusCorrectionTable& table) {
  std::vector<AccuracyRow> out;
  for (const auto& r : table.rows()) {
    const double m = ellipse_corrected_distance(r.area_px, r.major_r, r.minor_r, table);
    out.push_back({r.horizontal, m, r.actual_d, accuracy_percent(m, r.actual_d)});
  }
  return out;
}

/// Photogrammetric distance from the image position alone: an upward camera
/// under a ceiling at height h sees an LED at pixel radius rho from the
/// principal point along a ray of slope rho / f_px.
inline double image_geometry_distance(const Point2& center_px, const CameraIntrinsics& cam, double h) {
  const Point2 pp = principal_point(cam);
  const double rho = std::hypot(center_px.x - pp.x, center_px.y - pp.y);
  return h * std::hypot(1.0, rho / cam.focal_px());
}

// ---------------------------------------------------------------------------
// Ranging error against the number of LEDs in view

struct MultiLedErrorPoint {
  double horizontal{0.0};
  int n_leds{0};
  double mean_error{0.0};
};

struct MultiLedSweep {
  double spacing{0.0};
  int n_leds{0};
  std::vector<MultiLedErrorPoint> points;
  double mean_error{0.0};
};

/// The camera starts under LED (0,0) of a 2x2 block with spacing a and
/// steps 0..100 cm along +x. At every step the n LEDs nearest the camera
/// are ranged with the uncorrected area law, calibrated straight under an
/// LED, and their absolute errors are averaged.
inline MultiLedSweep multi_led_error_sweep(const CameraIntrinsics& cam, double h, double a, int n_leds,
                                           double led_diameter = 9.5, double step = 10.0, int steps = 10) {
  if (n_leds < 1 || n_leds > 4) throw DomainError("n_leds must be within 1..4");
  const auto ref = project_led({0.0, 0.0, 0.0}, cam, {0.0, 0.0, h}, led_diameter);
  const Calibration cal = Calibration::fit(h, ref->area_px);
  MultiLedSweep sweep{a, n_leds, {}, 0.0};
  double total = 0.0;
  int count = 0;
  for (int k = 0; k <= steps; ++k) {
    const RobotPose pose{k * step, 0.0, 0.0};
    std::vector<double> errs;
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i < 2; ++i) {
        const auto e = project_led(pose, cam, {i * a, j * a, h}, led_diameter);
        if (!e) continue;
        errs.push_back(std::abs(direct_distance(e->area_px, cal) - e->direct_distance));
      }
    if (static_cast<int>(errs.size()) < n_leds) throw DomainError("fewer LEDs in view than requested");
    std::sort(errs.begin(), errs.end());
    errs.resize(n_leds);
    double sum = 0.0;
    for (double e : errs) sum += e;
    sweep.points.push_back({k * step, n_leds, sum / n_leds});
    total += sum;
    count += n_leds;
  }
  sweep.mean_error = total / count;
  return sweep;
}

}  // namespace occnav
