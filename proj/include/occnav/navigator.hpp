#pragma once

// Navigation loop: read the IDs in view, work out which way the grid runs,
// and hop from LED floor point to LED floor point until standing under the
// target.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "occnav/core_model.hpp"
#include "occnav/decoder.hpp"
#include "occnav/optics_ranging.hpp"
#include "occnav/world.hpp"

namespace occnav {

struct OrientationUnknown : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScanError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AxisOrientation {
  bool x_right{true};  // x grows toward image right
  bool y_front{true};  // y grows toward image top (robot front)

  friend bool operator==(const AxisOrientation&, const AxisOrientation&) = default;
};

/// LED seen in the image together with its grid cell.
struct SeenLed {
  LocationId id;
  Cell cell;
  Region region{Region::LFR};
  Point2 center_px;
  double area_px{0.0};
  double major_r{0.0};
  double minor_r{0.0};
};

inline std::vector<SeenLed> locate_seen(const LedGridConfig& grid, const std::vector<DecodedLed>& decoded) {
  std::vector<SeenLed> out;
  for (const auto& d : decoded) {
    if (static_cast<int>(d.id.bits) >= grid.led_count()) continue;  // not one of ours
    out.push_back({d.id, cell_of(grid, d.id), d.region, d.blob.center_px, d.blob.area_px, d.blob.major_r,
                   d.blob.minor_r});
  }
  return out;
}

namespace detail {

// LED of a region nearest to the image center, if any.
inline const SeenLed* region_rep(const std::vector<SeenLed>& seen, Region r, Point2 pp) {
  const SeenLed* best = nullptr;
  double best_d = 1e300;
  for (const auto& s : seen) {
    if (s.region != r) continue;
    const double d = std::hypot(s.center_px.x - pp.x, s.center_px.y - pp.y);
    if (d < best_d) {
      best_d = d;
      best = &s;
    }
  }
  return best;
}

}  // namespace detail

/// Diagonal pairs (LF, RB) and (FR, BL): x grows to the right when
/// X_LF < X_RB or X_FR > X_BL, y grows to the front when Y_LF > Y_RB or
/// Y_FR > Y_BL.
inline AxisOrientation infer_orientation(const SeenLed* lf, const SeenLed* fr, const SeenLed* rb,
                                         const SeenLed* bl) {
  std::optional<bool> xr, yf;
  auto merge = [](std::optional<bool>& slot, bool v) {
    if (slot && *slot != v) throw OrientationUnknown("diagonal pairs disagree on the axis direction");
    slot = v;
  };
  bool any_pair = false;
  if (lf && rb) {
    if (lf->cell == rb->cell) throw DomainError("a diagonal pair must hold two distinct LEDs");
    any_pair = true;
    if (lf->cell.i != rb->cell.i) merge(xr, lf->cell.i < rb->cell.i);
    if (lf->cell.j != rb->cell.j) merge(yf, lf->cell.j > rb->cell.j);
  }
  if (fr && bl) {
    if (fr->cell == bl->cell) throw DomainError("a diagonal pair must hold two distinct LEDs");
    any_pair = true;
    if (fr->cell.i != bl->cell.i) merge(xr, fr->cell.i > bl->cell.i);
    if (fr->cell.j != bl->cell.j) merge(yf, fr->cell.j > bl->cell.j);
  }
  if (!any_pair) throw OrientationUnknown("no diagonal pair of LEDs in view");
  if (!xr || !yf) throw OrientationUnknown("diagonal pairs do not separate both axes");
  return {*xr, *yf};
}

/// Same comparison over any two LEDs: an axis is resolved by a pair whose
/// cells differ on it and whose images are separated along it. Used near
/// walls and corners, where the view holds no diagonal region pair.
inline AxisOrientation infer_orientation_pairwise(const std::vector<SeenLed>& seen) {
  std::optional<bool> xr, yf;
  for (std::size_t a = 0; a < seen.size(); ++a)
    for (std::size_t b = a + 1; b < seen.size(); ++b) {
      const SeenLed& p = seen[a];
      const SeenLed& q = seen[b];
      const double dx = q.center_px.x - p.center_px.x, dy = p.center_px.y - q.center_px.y;
      const int di = q.cell.i - p.cell.i, dj = q.cell.j - p.cell.j;
      // only pairs that move mostly along one image axis
      if (!xr && di != 0 && dj == 0 && std::abs(dx) > std::abs(dy)) xr = (di > 0) == (dx > 0);
      if (!yf && dj != 0 && di == 0 && std::abs(dy) > std::abs(dx)) yf = (dj > 0) == (dy > 0);
    }
  if (!xr || !yf) throw OrientationUnknown("LEDs in view do not span both grid axes");
  return {*xr, *yf};
}

inline AxisOrientation infer_orientation(const std::vector<SeenLed>& seen, const CameraIntrinsics& cam) {
  const Point2 pp = principal_point(cam);
  try {
    return infer_orientation(detail::region_rep(seen, Region::LFR, pp), detail::region_rep(seen, Region::FRR, pp),
                             detail::region_rep(seen, Region::RBR, pp), detail::region_rep(seen, Region::BLR, pp));
  } catch (const OrientationUnknown&) {
    return infer_orientation_pairwise(seen);
  }
}

// ---------------------------------------------------------------------------

enum class RangingMode {
  ImageGeometry,  // D from the blob's pixel offset and the known height
  AreaLaw,        // D = K / sqrt(area)
};

struct NavConfig {
  double arrival_tolerance{5.0};  // cm
  RangingMode ranging{RangingMode::ImageGeometry};
  Calibration calibration{};      // used by AreaLaw
  double actuation_sigma{0.0};    // cm, Gaussian per axis
  double speed_cm_s{25.0};
  int step_cap{-1};               // < 0: nx + ny + 2
};

enum class ActionKind { Done, MoveToFloorOf };

enum class Branch { Target, Waypoint, Fallback };

inline const char* to_string(ActionKind k) { return k == ActionKind::Done ? "done" : "move"; }

inline const char* to_string(Branch b) {
  switch (b) {
    case Branch::Target: return "target";
    case Branch::Waypoint: return "waypoint";
    case Branch::Fallback: return "fallback";
  }
  return "?";
}

struct Action {
  ActionKind kind{ActionKind::Done};
  Branch branch{Branch::Target};
  LocationId led;
  double distance_s{0.0};   // cm along the floor
  double direct_d{0.0};     // cm, estimated camera-to-LED distance
  Point2 direction;         // unit vector in the robot frame (right, front)
  bool terminal{false};
  std::optional<AxisOrientation> orientation;
};

struct LogEntry {
  int step{0};
  double time_s{0.0};
  RobotPose pose;
  std::vector<std::uint8_t> ids;  // decoded, in region order
  Action action;
  int grid_distance{0};           // Chebyshev, robot's nearest cell to target

  friend bool operator==(const LogEntry& a, const LogEntry& b) {
    return a.step == b.step && a.time_s == b.time_s && a.pose.x == b.pose.x && a.pose.y == b.pose.y &&
           a.pose.heading == b.pose.heading && a.ids == b.ids && a.action.kind == b.action.kind &&
           a.action.led == b.action.led && a.action.distance_s == b.action.distance_s &&
           a.grid_distance == b.grid_distance;
  }
};

class NavState {
 public:
  NavState(RobotPose pose, LocationId target) : pose_(pose), target_(target) {}

  const RobotPose& pose() const { return pose_; }
  LocationId target() const { return target_; }
  const std::optional<AxisOrientation>& orientation() const { return orientation_; }
  const std::vector<LogEntry>& log() const { return log_; }

  void set_orientation(AxisOrientation o) { orientation_ = o; }

  void append(LogEntry e) {
    if (!log_.empty() && e.time_s < log_.back().time_s) throw DomainError("visited log must be monotone in time");
    log_.push_back(std::move(e));
  }

  // Only executed moves change the pose.
  void execute(const RobotPose& next) { pose_ = next; }

 private:
  RobotPose pose_;
  LocationId target_;
  std::optional<AxisOrientation> orientation_;
  std::vector<LogEntry> log_;
};

inline double estimate_direct_distance(const SeenLed& s, const LedGridConfig& grid, const CameraIntrinsics& cam,
                                       const NavConfig& cfg) {
  if (cfg.ranging == RangingMode::AreaLaw) return direct_distance(s.area_px, cfg.calibration);
  return image_geometry_distance(s.center_px, cam, grid.ceiling_height_hr);
}

inline Action action_toward(const SeenLed& s, Branch branch, const LedGridConfig& grid, const CameraIntrinsics& cam,
                            const NavConfig& cfg) {
  Action a;
  a.kind = ActionKind::MoveToFloorOf;
  a.branch = branch;
  a.led = s.id;
  a.direct_d = estimate_direct_distance(s, grid, cam, cfg);
  const double h = grid.ceiling_height_hr;
  a.distance_s = a.direct_d > h ? horizontal_distance(a.direct_d, h) : 0.0;
  const Point2 pp = principal_point(cam);
  const double right = s.center_px.x - pp.x, front = pp.y - s.center_px.y;
  const double n = std::hypot(right, front);
  a.direction = n > 0.0 ? Point2{right / n, front / n} : Point2{0.0, 0.0};
  return a;
}

/// One decision of the navigation flowchart.
inline Action next_action(NavState& state, const std::vector<SeenLed>& seen, const LedGridConfig& grid,
                          const CameraIntrinsics& cam, const NavConfig& cfg) {
  if (seen.empty()) throw ScanError("no decodable LED in view");

  for (const auto& s : seen)
    if (s.id == state.target()) {
      Action a = action_toward(s, Branch::Target, grid, cam, cfg);
      a.terminal = true;
      if (a.distance_s <= cfg.arrival_tolerance) a.kind = ActionKind::Done;
      a.orientation = state.orientation();
      return a;
    }

  if (seen.size() >= 3) {
    try {
      state.set_orientation(infer_orientation(seen, cam));
      const Cell goal = cell_of(grid, state.target());
      const SeenLed* best = nullptr;
      int best_cd = 0;
      double best_s = 0.0;
      for (const auto& s : seen) {
        const int cd = chebyshev(s.cell, goal);
        const double sd = action_toward(s, Branch::Waypoint, grid, cam, cfg).distance_s;
        if (!best || cd < best_cd || (cd == best_cd && (sd < best_s || (sd == best_s && s.id < best->id)))) {
          best = &s;
          best_cd = cd;
          best_s = sd;
        }
      }
      Action a = action_toward(*best, Branch::Waypoint, grid, cam, cfg);
      a.orientation = state.orientation();
      return a;
    } catch (const OrientationUnknown&) {
      // fall through to the fallback choice
    }
  }

  // Two LEDs (or a failed orientation): go under the nearer-looking one.
  // An LED already underfoot is no place to go while another one is in view.
  const SeenLed* pick = nullptr;
  for (const auto& s : seen) {
    if (seen.size() > 1 && action_toward(s, Branch::Fallback, grid, cam, cfg).distance_s <= cfg.arrival_tolerance)
      continue;
    if (!pick || s.area_px > pick->area_px || (s.area_px == pick->area_px && s.id < pick->id)) pick = &s;
  }
  if (!pick) pick = &seen.front();
  Action a = action_toward(*pick, Branch::Fallback, grid, cam, cfg);
  a.orientation = state.orientation();
  return a;
}

inline Cell nearest_cell(const LedGridConfig& grid, const RobotPose& pose) {
  auto idx = [](double v, double o, double a, int n) {
    return std::clamp(static_cast<int>(std::lround((v - o) / a)), 0, n - 1);
  };
  return {idx(pose.x, grid.origin_x, grid.spacing_a, grid.nx), idx(pose.y, grid.origin_y, grid.spacing_a, grid.ny)};
}

struct NavScenario {
  LedGridConfig grid;
  CameraIntrinsics cam;
  RobotPose start;
  LocationId target;
  CaptureConfig capture;
  DecoderConfig decoder;
  NavConfig nav;
  std::uint64_t seed{1};
};

struct NavResult {
  std::vector<LogEntry> log;
  RobotPose final_pose;
  int moves{0};
  double final_error{0.0};  // cm, floor distance to the target's floor point
};

struct NonConvergence : std::runtime_error {
  NonConvergence(const std::string& what, std::vector<LogEntry> log)
      : std::runtime_error(what), log(std::move(log)) {}
  std::vector<LogEntry> log;
};

inline std::uint64_t step_seed(std::uint64_t seed, int step, int attempt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(attempt)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

inline NavResult run_navigation(const NavScenario& sc) {
  sc.grid.validate();
  sc.cam.validate();
  const Cell goal = cell_of(sc.grid, sc.target);
  const int cap = sc.nav.step_cap >= 0 ? sc.nav.step_cap : sc.grid.nx + sc.grid.ny + 2;
  const double readout_s = sc.capture.frames / sc.cam.fps;
  constexpr int kScanAttempts = 3;

  NavState state(sc.start, sc.target);
  std::mt19937_64 actuation(step_seed(sc.seed, -1, 0));
  std::normal_distribution<double> act_noise(0.0, 1.0);
  double t = 0.0;
  int moves = 0;
  for (int step = 0;; ++step) {
    std::vector<SeenLed> seen;
    FrameDecode obs;
    for (int attempt = 0; attempt < kScanAttempts && seen.empty(); ++attempt) {
      obs = observe(sc.grid, sc.cam, state.pose(), t, sc.capture, step_seed(sc.seed, step, attempt), sc.decoder);
      seen = locate_seen(sc.grid, obs.leds);
      t += readout_s;
    }
    if (seen.empty())
      throw NonConvergence("no LED decoded at step " + std::to_string(step), state.log());

    const Action a = next_action(state, seen, sc.grid, sc.cam, sc.nav);
    LogEntry e;
    e.step = step;
    e.time_s = t;
    e.pose = state.pose();
    for (const auto& s : seen) e.ids.push_back(s.id.bits);
    e.action = a;
    e.grid_distance = chebyshev(nearest_cell(sc.grid, state.pose()), goal);
    state.append(e);
    if (a.kind == ActionKind::Done) break;
    if (moves >= cap)
      throw NonConvergence("step cap of " + std::to_string(cap) + " moves exceeded", state.log());

    const Point2 p = to_world_frame(state.pose(), a.direction.x * a.distance_s, a.direction.y * a.distance_s);
    RobotPose next{p.x, p.y, state.pose().heading};
    if (sc.nav.actuation_sigma > 0.0) {
      next.x += sc.nav.actuation_sigma * act_noise(actuation);
      next.y += sc.nav.actuation_sigma * act_noise(actuation);
    }
    state.execute(next);
    ++moves;
    t += a.distance_s / sc.nav.speed_cm_s;
  }

  NavResult r;
  r.log = state.log();
  r.final_pose = state.pose();
  r.moves = moves;
  const Vec3 f = floor_position(sc.grid, sc.target);
  r.final_error = std::hypot(r.final_pose.x - f.x, r.final_pose.y - f.y);
  return r;
}

/// Re-simulates a scenario and checks that it reproduces a recorded log.
inline bool replay_matches(const NavScenario& sc, const std::vector<LogEntry>& recorded) {
  std::vector<LogEntry> fresh;
  try {
    fresh = run_navigation(sc).log;
  } catch (const NonConvergence& e) {
    fresh = e.log;
  }
  return fresh == recorded;
}

}  // namespace occnav
