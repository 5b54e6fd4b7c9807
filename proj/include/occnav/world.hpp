#pragma once

// Synthetic world: every grid LED broadcasts its own ID, and the robot's
// camera captures a short burst of frames wherever it stands.

#include <cstdint>
#include <random>
#include <vector>

#include "occnav/core_model.hpp"
#include "occnav/decoder.hpp"
#include "occnav/shutter_sim.hpp"
#include "occnav/txcodec.hpp"

namespace occnav {

struct CaptureConfig {
  int frames{20};            // frames per readout (1 s at 20 fps)
  double jitter_s{1e-3};     // uniform frame-start jitter, +-
  double noise_sigma{0.0};
  double chip_rate{4000.0};
};

/// Per-LED transmit phase; LEDs are not synchronized with each other.
inline double led_phase(LocationId id, double chip_rate) {
  return (id.bits * 7 % kFrameChips) / chip_rate + id.bits * 1.3e-5;
}

inline std::vector<SceneLed> build_scene(const LedGridConfig& grid, const CameraIntrinsics& cam,
                                         const RobotPose& pose, double chip_rate) {
  std::vector<SceneLed> scene;
  for (int b = 0; b < grid.led_count(); ++b) {
    const LocationId id{static_cast<std::uint8_t>(b)};
    auto e = project_led(pose, cam, led_world_position(grid, id), grid.led_diameter);
    if (!e) continue;
    scene.push_back({*e, Waveform(encode_id(id.bits), chip_rate, led_phase(id, chip_rate))});
  }
  return scene;
}

/// Frame k starts at t0 + k/fps plus a seeded jitter. The spread of start
/// times is what lets a stationary camera see every chip of the codeword.
inline std::vector<FrameScan> capture_burst(const std::vector<SceneLed>& scene, const CameraIntrinsics& cam,
                                            double t0, const CaptureConfig& cfg, std::uint64_t seed) {
  if (cfg.frames < 1) throw DomainError("capture needs at least one frame");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-cfg.jitter_s, cfg.jitter_s);
  std::vector<FrameScan> frames;
  frames.reserve(cfg.frames);
  for (int k = 0; k < cfg.frames; ++k) {
    const double t = t0 + k * cam.frame_period() + (cfg.jitter_s > 0.0 ? jitter(rng) : 0.0);
    const RenderOptions opt{cfg.noise_sigma, rng()};
    frames.push_back(capture_frame(scene, cam, t, opt));
  }
  return frames;
}

inline FrameDecode observe(const LedGridConfig& grid, const CameraIntrinsics& cam, const RobotPose& pose,
                           double t0, const CaptureConfig& cfg, std::uint64_t seed,
                           const DecoderConfig& dec = {}) {
  const auto scene = build_scene(grid, cam, pose, cfg.chip_rate);
  const auto frames = capture_burst(scene, cam, t0, cfg, seed);
  DecoderConfig d = dec;
  d.chip_rate = cfg.chip_rate;
  return decode_sequence(frames, d);
}

}  // namespace occnav
