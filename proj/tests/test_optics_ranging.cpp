#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "occnav/optics_ranging.hpp"

using namespace occnav;

namespace {
constexpr double kDeg = kPi / 180.0;
}

TEST(Fov, Angles) {
  CameraIntrinsics c;
  c.sensor_w_mm = 2 * c.focal_length_mm;
  EXPECT_NEAR(fov_angles(c).phi_h, kPi / 2, 1e-12);
  const FovSpec f = fov_angles(CameraIntrinsics{});
  EXPECT_NEAR(f.phi_h / kDeg, 74.61, 0.01);
  EXPECT_NEAR(f.phi_h, 2 * std::atan(6.4 / 8.4), 1e-12);
  double prev = kPi;
  for (double focal = 1.0; focal < 20.0; focal += 0.5) {
    c = {};
    c.focal_length_mm = focal;
    const double phi = fov_angles(c).phi_h;
    EXPECT_LT(phi, prev);
    prev = phi;
  }
  c.focal_length_mm = 0;
  EXPECT_THROW(fov_angles(c), DomainError);
}

TEST(Fov, AreaAsWritten) {
  EXPECT_NEAR(fov_area(100, 45 * kDeg, 45 * kDeg), 4e4, 1e-6);
  EXPECT_NEAR(fov_area(200, 30 * kDeg, 40 * kDeg) / fov_area(100, 30 * kDeg, 40 * kDeg), 4.0, 1e-12);
  EXPECT_NEAR(expected_led_count(100, 45 * kDeg, 45 * kDeg, 50), 16.0, 1e-9);
  EXPECT_THROW(fov_area(100, kPi / 2, 0.3), DomainError);
  EXPECT_THROW(fov_area(100, 0.3, 2.0), DomainError);
}

TEST(Fov, GeometricFootprintIsTheImagedRectangle) {
  const CameraIntrinsics cam;
  const FovSpec f = fov_angles(cam);
  const double w = 256 * cam.sensor_w_mm / cam.focal_length_mm;
  const double h = 256 * cam.sensor_h_mm / cam.focal_length_mm;
  EXPECT_NEAR(fov_footprint_geometric(256, f.phi_h, f.phi_v), w * h, 1e-6);
}

TEST(Fov, BruteForceCount) {
  LedGridConfig empty;
  empty.nx = 0;
  empty.ny = 0;
  EXPECT_EQ(brute_force_led_count(empty, {}, {}), 0);
  const LedGridConfig grid;
  for (double x = 0; x <= 150; x += 25)
    for (double y = 0; y <= 350; y += 25) EXPECT_GE(brute_force_led_count(grid, {}, {x, y, 0}), 4);
}

TEST(Fov, FormulaAgreesWithLatticeCount) {
  const CameraIntrinsics cam;
  const FovSpec f = fov_angles(cam);
  LedGridConfig big;  // large lattice, deliberately beyond the ID space
  big.nx = 40;
  big.ny = 40;
  big.origin_x = -1000;
  big.origin_y = -1000;
  const double n = expected_led_count_geometric(256, f.phi_h, f.phi_v, 50);
  const double slack = lattice_boundary_term(256, f, 50);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) {
      const RobotPose pose{-100 + 23.7 * i, -100 + 19.3 * j, 0};
      EXPECT_LE(std::abs(brute_force_led_count(big, cam, pose) - n), slack);
    }
}

TEST(Ranging, CalibrationFromTableRow0) {
  const Calibration cal = Calibration::fit(255.5, 348);
  EXPECT_NEAR(cal.k, 4766.29, 0.005);
  EXPECT_NEAR(direct_distance(348, cal), 255.5, 1e-9);
  EXPECT_NEAR(direct_distance(4 * 348, cal), 255.5 / 2, 1e-9);
  EXPECT_NEAR(direct_distance(288, cal), 280.9, 0.05);
  EXPECT_THROW(direct_distance(0, cal), DomainError);
  EXPECT_THROW(direct_distance(10, Calibration{}), DomainError);
}

TEST(Ranging, PinholeSelfConsistency) {
  const CameraIntrinsics cam;
  const auto ref = project_led({}, cam, {0, 0, 200}, 9.5);
  const Calibration cal = Calibration::fit(200, ref->area_px);
  for (double d = 150; d <= 480; d += 15) {
    const auto e = project_led({}, cam, {0, 0, d}, 9.5);
    EXPECT_NEAR(direct_distance(e->area_px, cal), d, 0.01 * d);
  }
}

TEST(Ranging, HorizontalDistance) {
  EXPECT_DOUBLE_EQ(horizontal_distance(255.5, 255.5), 0.0);
  EXPECT_NEAR(horizontal_distance(274.5, 255.5), 100.35, 0.005);
  EXPECT_NEAR(horizontal_distance(260.2, 255.5), 49.2, 0.05);
  EXPECT_THROW(horizontal_distance(200, 255.5), DomainError);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1.0, 500.0);
  for (int k = 0; k < 1000; ++k) {
    const double s = u(rng), h = u(rng);
    EXPECT_NEAR(horizontal_distance(std::sqrt(h * h + s * s), h), s, 1e-9 * std::max(1.0, s) * 1e3);
  }
}

TEST(Correction, LookupExamples) {
  const auto t = reference_table1();
  EXPECT_DOUBLE_EQ(ellipse_corrected_distance(kPi * 11 * 11, 11, 11, t), 255.5);
  EXPECT_DOUBLE_EQ(ellipse_corrected_distance(288, 11, 8, t), 272.5);
  const double mid = ellipse_corrected_distance(kPi * 11 * 8.5, 11, 8.5, t);
  EXPECT_GT(mid, 269.5);
  EXPECT_LT(mid, 272.5);
  EXPECT_DOUBLE_EQ(ellipse_corrected_distance(100, 11, 3, t), 272.5);  // clamped
  EXPECT_THROW(ellipse_corrected_distance(288, 11, 0, t), DomainError);
  EXPECT_THROW(RadiusCorrectionTable{}.lookup(8), DomainError);
}

TEST(Correction, ReproducesMeasuredColumn) {
  const auto t = reference_table1();
  for (const auto& r : t.rows())
    EXPECT_NEAR(ellipse_corrected_distance(r.area_px, r.major_r, r.minor_r, t), r.measured_d, 0.5) << r.horizontal;
}

TEST(Correction, CsvLoadAndInvariants) {
  std::istringstream good(
      "h,m,a,e,area,r,r2\n0,255.5,255.5,0,348,11,11\n100,272.5,274.5,2,288,11,8\n");
  const auto t = RadiusCorrectionTable::from_csv(good);
  EXPECT_EQ(t.rows().size(), 2u);
  std::istringstream bad_order("h\n10,1,1,0,300,11,9\n0,1,1,0,310,11,9\n");
  EXPECT_THROW(RadiusCorrectionTable::from_csv(bad_order), DomainError);
  std::istringstream bad_area("h\n0,1,1,0,300,11,9\n10,1,1,0,310,11,9\n");
  EXPECT_THROW(RadiusCorrectionTable::from_csv(bad_area), DomainError);
  std::istringstream short_row("h\n0,1,1\n");
  EXPECT_THROW(RadiusCorrectionTable::from_csv(short_row), DomainError);
  const auto file = RadiusCorrectionTable::from_csv_file(OCCNAV_DATA_DIR "/table1.csv");
  ASSERT_EQ(file.rows().size(), reference_table1().rows().size());
  for (std::size_t k = 0; k < file.rows().size(); ++k) {
    EXPECT_EQ(file.rows()[k].area_px, reference_table1().rows()[k].area_px);
    EXPECT_EQ(file.rows()[k].measured_d, reference_table1().rows()[k].measured_d);
  }
}

TEST(Accuracy, Report) {
  const auto rep = accuracy_report(reference_table1());
  EXPECT_DOUBLE_EQ(rep.front().accuracy, 100.0);
  EXPECT_NEAR(rep.back().accuracy, 100.0 * (1 - 2 / 274.5), 1e-9);
  EXPECT_NEAR(rep.back().accuracy, 99.27, 0.005);
  for (std::size_t k = 1; k < rep.size(); ++k) EXPECT_LE(rep[k].accuracy, rep[k - 1].accuracy);
  for (const auto& r : rep) EXPECT_GE(r.accuracy, 98.0);
}

TEST(ImageGeometry, RecoversTrueDistance) {
  const CameraIntrinsics cam;
  for (double s : {0.0, 37.0, 100.0, 140.0}) {
    const auto e = project_led({s, 0, 0}, cam, {0, 0, 256}, 9.5);
    EXPECT_NEAR(image_geometry_distance(e->center_px, cam, 256), e->direct_distance, 1e-9);
  }
}

TEST(MultiLed, ErrorGrowsWithLedCount) {
  const CameraIntrinsics cam;
  for (double a : {50.0, 100.0}) {
    double prev = -1;
    for (int n = 1; n <= 4; ++n) {
      const auto s = multi_led_error_sweep(cam, 256, a, n);
      EXPECT_GE(s.mean_error, prev);
      prev = s.mean_error;
      EXPECT_EQ(s.points.size(), 11u);
    }
    EXPECT_LE(prev, a == 50.0 ? 7.5 : 8.5);
  }
  EXPECT_THROW(multi_led_error_sweep(cam, 256, 50, 5), DomainError);
}
