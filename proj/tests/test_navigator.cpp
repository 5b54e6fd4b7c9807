#include <gtest/gtest.h>

#include "occnav/navigator.hpp"

using namespace occnav;

namespace {

const LedGridConfig kGrid;
const CameraIntrinsics kCam;

SeenLed seen_at(const LedGridConfig& grid, Cell c, Region r, Point2 px, double area = 300) {
  return {id_of(grid, c), c, r, px, area, 10, 9};
}

// What the camera reports for grid LEDs from a given pose, straight from
// the projection model.
std::vector<SeenLed> seen_from(const RobotPose& pose, const std::vector<Cell>& cells) {
  std::vector<SeenLed> out;
  FrameScan f;
  f.width = kCam.img_w;
  f.height = kCam.img_h;
  for (const Cell& c : cells) {
    const auto e = project_led(pose, kCam, led_world_position(kGrid, c), kGrid.led_diameter);
    EXPECT_TRUE(e);
    out.push_back({id_of(kGrid, c), c, region_of(f, e->center_px), e->center_px, e->area_px, e->major_r, e->minor_r});
  }
  return out;
}

}  // namespace

TEST(Orientation, DiagonalRules) {
  LedGridConfig g;
  const SeenLed lf = seen_at(g, {2, 5}, Region::LFR, {100, 100});
  const SeenLed rb = seen_at(g, {3, 4}, Region::RBR, {700, 500});
  EXPECT_EQ(infer_orientation(&lf, nullptr, &rb, nullptr), (AxisOrientation{true, true}));
  const SeenLed lf2 = seen_at(g, {3, 2}, Region::LFR, {100, 100});
  const SeenLed rb2 = seen_at(g, {2, 3}, Region::RBR, {700, 500});
  EXPECT_EQ(infer_orientation(&lf2, nullptr, &rb2, nullptr), (AxisOrientation{false, false}));
  // cell (4,2) needs a grid wider than the default
  g.nx = 5;
  g.ny = 6;
  const SeenLed lf3 = seen_at(g, {4, 2}, Region::LFR, {100, 100});
  const SeenLed rb3 = seen_at(g, {3, 3}, Region::RBR, {700, 500});
  EXPECT_EQ(infer_orientation(&lf3, nullptr, &rb3, nullptr), (AxisOrientation{false, false}));
}

TEST(Orientation, DegenerateAndMissingPairs) {
  const SeenLed fr = seen_at(kGrid, {1, 1}, Region::FRR, {700, 100});
  const SeenLed bl = seen_at(kGrid, {1, 1}, Region::BLR, {100, 500});
  EXPECT_THROW(infer_orientation(nullptr, &fr, nullptr, &bl), DomainError);
  EXPECT_THROW(infer_orientation(nullptr, &fr, nullptr, nullptr), OrientationUnknown);
}

TEST(Orientation, PairChoiceDoesNotMatter) {
  for (double heading : {0.0, kPi}) {
    const RobotPose pose{75, 175, heading};
    const auto s = seen_from(pose, {{1, 3}, {2, 3}, {1, 4}, {2, 4}});
    const SeenLed *lf = nullptr, *fr = nullptr, *rb = nullptr, *bl = nullptr;
    for (const auto& x : s) {
      if (x.region == Region::LFR) lf = &x;
      if (x.region == Region::FRR) fr = &x;
      if (x.region == Region::RBR) rb = &x;
      if (x.region == Region::BLR) bl = &x;
    }
    const auto a = infer_orientation(lf, nullptr, rb, nullptr);
    const auto b = infer_orientation(nullptr, fr, nullptr, bl);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, infer_orientation(lf, fr, rb, bl));
    EXPECT_EQ(a.x_right, heading == 0.0);
    EXPECT_EQ(a.y_front, heading == 0.0);
  }
}

TEST(Orientation, PairwiseAtACorner) {
  // standing under (0,0): every other LED lies up and to the right
  const auto s = seen_from({0, 0, 0}, {{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  EXPECT_EQ(infer_orientation(s, kCam), (AxisOrientation{true, true}));
}

TEST(NextAction, TargetInView) {
  NavConfig cfg;
  cfg.ranging = RangingMode::AreaLaw;
  LedGridConfig g = kGrid;
  g.ceiling_height_hr = 255.5;
  cfg.calibration = Calibration{274.5 * std::sqrt(288.0)};
  NavState st({0, 0, 0}, LocationId{5});
  const std::vector<SeenLed> seen{seen_at(g, {1, 1}, Region::LFR, {200, 299.5}, 288)};
  const Action a = next_action(st, seen, g, kCam, cfg);
  EXPECT_EQ(a.kind, ActionKind::MoveToFloorOf);
  EXPECT_EQ(a.led.bits, 5);
  EXPECT_TRUE(a.terminal);
  EXPECT_NEAR(a.distance_s, 100.35, 0.005);
  EXPECT_NEAR(a.direction.x, -1.0, 1e-12);  // the blob sits left of center
}

TEST(NextAction, AlreadyUnderTarget) {
  NavState st({0, 0, 0}, LocationId{0});
  const auto s = seen_from({0.5, 0.3, 0}, {{0, 0}, {1, 0}, {0, 1}});
  const Action a = next_action(st, s, kGrid, kCam, NavConfig{});
  EXPECT_EQ(a.kind, ActionKind::Done);
}

TEST(NextAction, WaypointMinimizesGridDistance) {
  const RobotPose pose{25, 25, 0};
  NavState st(pose, id_of(kGrid, {3, 3}));
  const auto s = seen_from(pose, {{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  const Action a = next_action(st, s, kGrid, kCam, NavConfig{});
  EXPECT_EQ(a.kind, ActionKind::MoveToFloorOf);
  EXPECT_EQ(a.branch, Branch::Waypoint);
  EXPECT_EQ(a.led, id_of(kGrid, {1, 1}));
  ASSERT_TRUE(st.orientation());
  EXPECT_NEAR(a.distance_s, std::hypot(25.0, 25.0), 1e-6);
}

TEST(NextAction, TieBreaksOnFloorDistanceThenId) {
  const RobotPose pose{90, 45, 0};
  NavState st(pose, id_of(kGrid, {3, 5}));
  // (2,2) and (3,2) are both 3 steps from (3,5); (2,2) is nearer on the floor
  const auto s = seen_from(pose, {{1, 0}, {2, 2}, {3, 2}, {0, 1}});
  EXPECT_EQ(next_action(st, s, kGrid, kCam, NavConfig{}).led, id_of(kGrid, {2, 2}));
  // mirror-image blobs: equal floor distance, lower ID wins
  const std::vector<SeenLed> mirror{seen_at(kGrid, {3, 2}, Region::FRR, {449, 200}),
                                    seen_at(kGrid, {2, 2}, Region::LFR, {350, 200}),
                                    seen_at(kGrid, {0, 0}, Region::BLR, {300, 500})};
  EXPECT_EQ(next_action(st, mirror, kGrid, kCam, NavConfig{}).led, id_of(kGrid, {2, 2}));
}

TEST(NextAction, TwoLedFallbackPicksLargerBlob) {
  NavState st({0, 0, 0}, LocationId{31});
  const std::vector<SeenLed> two{seen_at(kGrid, {0, 0}, Region::FRR, {600, 250}, 250),
                                 seen_at(kGrid, {1, 0}, Region::FRR, {700, 250}, 240)};
  const Action a = next_action(st, two, kGrid, kCam, NavConfig{});
  EXPECT_EQ(a.branch, Branch::Fallback);
  EXPECT_EQ(a.led.bits, 0);
  const std::vector<SeenLed> tie{seen_at(kGrid, {1, 0}, Region::FRR, {600, 250}, 250),
                                 seen_at(kGrid, {0, 0}, Region::FRR, {700, 250}, 250)};
  EXPECT_EQ(next_action(st, tie, kGrid, kCam, NavConfig{}).led.bits, 0);
  EXPECT_THROW(next_action(st, {}, kGrid, kCam, NavConfig{}), ScanError);
}

TEST(NavStateLog, AppendOnlyAndMonotone) {
  NavState st({0, 0, 0}, LocationId{1});
  LogEntry e;
  e.time_s = 2.0;
  st.append(e);
  e.time_s = 1.0;
  EXPECT_THROW(st.append(e), DomainError);
  EXPECT_EQ(st.log().size(), 1u);
}

TEST(Run, StartUnderTargetMakesNoMove) {
  NavScenario sc;
  sc.start = {100, 150, 0};
  sc.target = id_of(kGrid, {2, 3});
  const auto r = run_navigation(sc);
  EXPECT_EQ(r.moves, 0);
  EXPECT_EQ(r.log.size(), 1u);
  EXPECT_LT(r.final_error, 1e-9);
}

TEST(Run, CornerToFarCornerStrictProgress) {
  NavScenario sc;
  sc.start = {0, 0, 0};
  sc.target = id_of(kGrid, {3, 7});
  const auto r = run_navigation(sc);
  EXPECT_LE(r.moves, kGrid.nx + kGrid.ny + 2);
  EXPECT_LE(r.final_error, 12.5);
  // every move lands under a new LED that is strictly closer on the grid
  for (std::size_t k = 1; k < r.log.size(); ++k) EXPECT_LT(r.log[k].grid_distance, r.log[k - 1].grid_distance);
  EXPECT_EQ(r.log.back().grid_distance, 0);
}

TEST(Run, TwoLedStartFallsBackThenResumes) {
  NavScenario sc;
  sc.start = {-100, -100, 0};
  sc.target = id_of(kGrid, {2, 1});
  const auto r = run_navigation(sc);
  ASSERT_GE(r.log.size(), 2u);
  EXPECT_EQ(r.log.front().ids.size(), 2u);
  EXPECT_EQ(r.log.front().action.branch, Branch::Fallback);
  EXPECT_GE(r.log[1].ids.size(), 3u);
  EXPECT_LE(r.final_error, 12.5);
}

TEST(Run, StepCapRaisesWithLog) {
  NavScenario sc;
  sc.start = {0, 0, 0};
  sc.target = id_of(kGrid, {3, 7});
  sc.nav.step_cap = 1;
  try {
    run_navigation(sc);
    FAIL() << "expected NonConvergence";
  } catch (const NonConvergence& e) {
    EXPECT_FALSE(e.log.empty());
  }
}

TEST(Run, ReplayReproducesTheLog) {
  NavScenario sc;
  sc.start = {140, 20, kPi};
  sc.target = id_of(kGrid, {0, 6});
  sc.seed = 99;
  const auto r = run_navigation(sc);
  EXPECT_TRUE(replay_matches(sc, r.log));
  auto tampered = r.log;
  tampered.back().pose.x += 1.0;
  EXPECT_FALSE(replay_matches(sc, tampered));
}

TEST(Run, AreaLawModeStillArrives) {
  NavScenario sc;
  sc.start = {20, 60, 0};
  sc.target = id_of(kGrid, {2, 4});
  sc.nav.ranging = RangingMode::AreaLaw;
  const auto ref = project_led({}, kCam, {0, 0, kGrid.ceiling_height_hr}, kGrid.led_diameter);
  sc.nav.calibration = Calibration::fit(kGrid.ceiling_height_hr, ref->area_px);
  sc.nav.arrival_tolerance = 40.0;  // area quantization makes short ranges coarse
  const auto r = run_navigation(sc);
  EXPECT_LE(r.final_error, 60.0);
}
