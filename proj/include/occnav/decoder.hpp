#pragma once

// Receiver-side image processing: LED blob detection, stripe measurement,
// chip recovery and ID decoding.
//
// Two decode paths exist. decode_blob reads the stripes of a single frame,
// which needs a blob tall enough to hold two codewords. decode_sequence
// folds time-stamped rows from several frames of a stationary camera onto
// one codeword period, which is what a ceiling LED a few metres away needs
// since its image spans only a handful of chips per frame.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "occnav/core_model.hpp"
#include "occnav/shutter_sim.hpp"
#include "occnav/txcodec.hpp"

namespace occnav {

struct InsufficientData : SyncError {
  using SyncError::SyncError;
};

enum class Region { LFR, FRR, RBR, BLR };

inline const char* to_string(Region r) {
  switch (r) {
    case Region::LFR: return "LFR";
    case Region::FRR: return "FRR";
    case Region::RBR: return "RBR";
    case Region::BLR: return "BLR";
  }
  return "?";
}

struct DecoderConfig {
  double lum_threshold{0.1};
  int max_gap_px{48};       // longest dark run bridged along the read-out axis
  int min_blob_area{12};
  int pivot{4};             // stripe width above which a run reads as ON
  double chip_rate{4000.0};  // nominal transmitter chip clock
};

struct ProfileSample {
  int readout_row{0};
  float lum{0.0f};
};

struct BlobDetection {
  std::vector<std::array<int, 2>> pixels;
  Point2 center_px;
  double area_px{0.0};
  double major_r{0.0};
  double minor_r{0.0};
  double minor_axis_angle{0.0};
  std::vector<ProfileSample> profile;  // one sample per read-out row, ascending
};

struct StripeRun {
  bool bright{false};
  int width{0};
};

struct DecodedLed {
  LocationId id;
  BlobDetection blob;
  Region region{Region::LFR};
  Chips chips;
};

struct BlobFailure {
  BlobDetection blob;
  Region region{Region::LFR};
  std::string reason;
};

struct FrameDecode {
  std::vector<DecodedLed> leds;
  std::vector<BlobFailure> failures;
};

namespace detail {

inline std::vector<std::uint8_t> close_along_readout(const FrameScan& frame, double threshold,
                                                     int max_gap) {
  const int w = frame.width, h = frame.height;
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(w) * h, 0);
  for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = frame.lum[k] > threshold;
  const bool along_x = readout_along_x(frame);
  const int lines = along_x ? h : w;
  const int len = along_x ? w : h;
  auto idx = [&](int line, int pos) -> std::size_t {
    return along_x ? static_cast<std::size_t>(line) * w + pos
                   : static_cast<std::size_t>(pos) * w + line;
  };
  for (int line = 0; line < lines; ++line) {
    int last = -1;
    for (int pos = 0; pos < len; ++pos) {
      if (!mask[idx(line, pos)]) continue;
      if (last >= 0 && pos - last - 1 <= max_gap)
        for (int q = last + 1; q < pos; ++q) mask[idx(line, q)] = 1;
      last = pos;
    }
  }
  return mask;
}

inline void fit_moments(BlobDetection& b) {
  const double n = static_cast<double>(b.pixels.size());
  double sx = 0, sy = 0;
  for (const auto& p : b.pixels) {
    sx += p[0];
    sy += p[1];
  }
  b.center_px = {sx / n, sy / n};
  double cxx = 0, cyy = 0, cxy = 0;
  for (const auto& p : b.pixels) {
    const double dx = p[0] - b.center_px.x, dy = p[1] - b.center_px.y;
    cxx += dx * dx;
    cyy += dy * dy;
    cxy += dx * dy;
  }
  // pixel-center sampling of a solid region; add the 1/12 px^2 box term
  cxx = cxx / n + 1.0 / 12.0;
  cyy = cyy / n + 1.0 / 12.0;
  cxy /= n;
  const double tr = cxx + cyy;
  const double disc = std::sqrt(std::max(0.0, (cxx - cyy) * (cxx - cyy) / 4.0 + cxy * cxy));
  const double l1 = tr / 2.0 + disc, l2 = std::max(0.0, tr / 2.0 - disc);
  // a solid ellipse has variance r^2/4 along each axis
  b.major_r = 2.0 * std::sqrt(l1);
  b.minor_r = 2.0 * std::sqrt(l2);
  // eigenvector of the smaller eigenvalue
  b.minor_axis_angle = 0.5 * std::atan2(2.0 * cxy, cxx - cyy) + kPi / 2.0;
  b.area_px = n;
}

inline void build_profile(const FrameScan& frame, BlobDetection& b) {
  std::vector<double> sum;
  std::vector<int> count;
  int lo = frame.raw_rows, hi = -1;
  for (const auto& p : b.pixels) {
    const int r = readout_row(frame, p[0], p[1]);
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  sum.assign(hi - lo + 1, 0.0);
  count.assign(hi - lo + 1, 0);
  for (const auto& p : b.pixels) {
    const int r = readout_row(frame, p[0], p[1]) - lo;
    sum[r] += frame.at(p[0], p[1]);
    ++count[r];
  }
  b.profile.clear();
  for (int r = 0; r <= hi - lo; ++r)
    if (count[r] > 0)
      b.profile.push_back({lo + r, static_cast<float>(sum[r] / count[r])});
}

}  // namespace detail

/// Connected LED blobs, largest first. Stripes are bridged along the
/// read-out axis so one LED yields one blob.
inline std::vector<BlobDetection> detect_rois(const FrameScan& frame, const DecoderConfig& cfg = {}) {
  if (!(cfg.lum_threshold > 0.0 && cfg.lum_threshold < 1.0))
    throw DomainError("luminance threshold must be in (0, 1)");
  const int w = frame.width, h = frame.height;
  auto mask = detail::close_along_readout(frame, cfg.lum_threshold, cfg.max_gap_px);
  std::vector<BlobDetection> blobs;
  std::vector<std::array<int, 2>> stack;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!mask[static_cast<std::size_t>(y) * w + x]) continue;
      BlobDetection b;
      stack.push_back({x, y});
      mask[static_cast<std::size_t>(y) * w + x] = 0;
      while (!stack.empty()) {
        const auto p = stack.back();
        stack.pop_back();
        b.pixels.push_back(p);
        constexpr int dx[4] = {1, -1, 0, 0};
        constexpr int dy[4] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          const int nx = p[0] + dx[k], ny = p[1] + dy[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          auto& m = mask[static_cast<std::size_t>(ny) * w + nx];
          if (!m) continue;
          m = 0;
          stack.push_back({nx, ny});
        }
      }
      if (static_cast<int>(b.pixels.size()) < cfg.min_blob_area) continue;
      detail::fit_moments(b);
      detail::build_profile(frame, b);
      blobs.push_back(std::move(b));
    }
  std::stable_sort(blobs.begin(), blobs.end(),
                   [](const auto& a, const auto& b) { return a.area_px > b.area_px; });
  return blobs;
}

/// Run-length encoding of an ON/OFF profile with the partial first and last
/// runs dropped.
inline std::vector<StripeRun> measure_stripes(std::span<const std::uint8_t> on_off) {
  if (on_off.empty()) throw DomainError("empty stripe profile");
  std::vector<StripeRun> runs;
  for (std::size_t k = 0; k < on_off.size();) {
    std::size_t e = k;
    while (e < on_off.size() && on_off[e] == on_off[k]) ++e;
    runs.push_back({on_off[k] != 0, static_cast<int>(e - k)});
    k = e;
  }
  if (runs.size() <= 2) return {};
  return {runs.begin() + 1, runs.end() - 1};
}

inline std::vector<std::uint8_t> binarize(const std::vector<ProfileSample>& profile, double threshold) {
  std::vector<std::uint8_t> out;
  out.reserve(profile.size());
  for (const auto& s : profile) out.push_back(s.lum > threshold);
  return out;
}

inline std::vector<int> widths_of(const std::vector<StripeRun>& runs) {
  std::vector<int> w;
  w.reserve(runs.size());
  for (const auto& r : runs) w.push_back(r.width);
  return w;
}

/// One chip per stripe: wider than the pivot reads as ON.
inline Chips widths_to_chips(std::span<const int> widths, int pivot = 4) {
  Chips out;
  out.reserve(widths.size());
  for (int w : widths) out.push_back(w > pivot ? 1 : 0);
  return out;
}

/// Expands every stripe to its chip count. A k-chip ON run spans about
/// k*rows_per_chip + smear rows and a k-chip OFF run k*rows_per_chip - smear,
/// where the smear comes from the row exposure overlapping chip edges.
inline Chips runs_to_chips(const std::vector<StripeRun>& runs, double rows_per_chip,
                           double smear_rows) {
  Chips out;
  for (const auto& r : runs) {
    const bool on = r.bright;
    const double raw = on ? (r.width - smear_rows) / rows_per_chip : (r.width + smear_rows) / rows_per_chip;
    const int k = std::max(1, static_cast<int>(std::lround(raw)));
    out.insert(out.end(), static_cast<std::size_t>(k), static_cast<Chip>(r.bright ? 1 : 0));
  }
  return out;
}

/// Finds one complete codeword in a linear (non-cyclic) chip stream.
inline std::uint8_t decode_linear_stream(std::span<const Chip> chips) {
  for (std::size_t off = 0; off + kFrameChips <= chips.size(); ++off) {
    if (chips[off] != 1 || chips[off + 1] != 1) continue;
    const auto payload = chips.subspan(off + 2, kPayloadChips);
    if (!is_valid_payload(payload)) continue;
    // the following start symbol, if visible, must agree
    if (off + kFrameChips < chips.size() && chips[off + kFrameChips] != 1) continue;
    return decode_manchester(payload);
  }
  throw SyncError("no complete codeword in stripe stream");
}

inline Region region_of(const FrameScan& frame, Point2 c) {
  const bool left = c.x < frame.width / 2.0;
  const bool front = c.y < frame.height / 2.0;
  if (front) return left ? Region::LFR : Region::FRR;
  return left ? Region::BLR : Region::RBR;
}

/// Single-frame stripe decode of one blob.
inline LocationId decode_blob(const BlobDetection& blob, const FrameScan& frame,
                              const DecoderConfig& cfg, Chips* chips_out = nullptr) {
  const auto on_off = binarize(blob.profile, cfg.lum_threshold);
  if (on_off.empty()) throw InsufficientData("blob has no profile");
  const auto runs = measure_stripes(on_off);
  if (runs.empty()) throw SyncError("no stripes in blob");
  const double rows_per_chip = 1.0 / (cfg.chip_rate * frame.row_time);
  const double smear = frame.exposure / frame.row_time * (1.0 - 2.0 * cfg.lum_threshold);
  Chips chips = runs_to_chips(runs, rows_per_chip, smear);
  if (chips_out) *chips_out = chips;
  if (chips.size() < 2 * kFrameChips)
    throw InsufficientData("blob carries " + std::to_string(chips.size()) + " chips, need 24");
  return LocationId{decode_linear_stream(chips)};
}

namespace detail {

template <class T>
void order_by_region(std::vector<T>& v) {
  std::stable_sort(v.begin(), v.end(), [](const T& a, const T& b) {
    if (a.region != b.region) return static_cast<int>(a.region) < static_cast<int>(b.region);
    if (a.blob.center_px.y != b.blob.center_px.y) return a.blob.center_px.y < b.blob.center_px.y;
    return a.blob.center_px.x < b.blob.center_px.x;
  });
}

}  // namespace detail

inline FrameDecode decode_frame(const FrameScan& frame, const DecoderConfig& cfg = {}) {
  FrameDecode out;
  for (auto& blob : detect_rois(frame, cfg)) {
    const Region region = region_of(frame, blob.center_px);
    try {
      Chips chips;
      const LocationId id = decode_blob(blob, frame, cfg, &chips);
      out.leds.push_back({id, std::move(blob), region, std::move(chips)});
    } catch (const std::exception& e) {
      out.failures.push_back({std::move(blob), region, e.what()});
    }
  }
  detail::order_by_region(out.leds);
  detail::order_by_region(out.failures);
  return out;
}

// ---------------------------------------------------------------------------
// Multi-frame decode by folding row samples onto the codeword period.

struct TimedSample {
  double t_start{0.0};  // exposure window start, s
  double lum{0.0};
};

namespace detail {

// Solves the small dense system (A + eps I) x = b in place.
inline std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int n) {
  for (int k = 0; k < n; ++k) a[k * n + k] += 1e-9;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[piv * n + c])) piv = r;
    if (piv != c) {
      for (int k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
      std::swap(b[c], b[piv]);
    }
    const double d = a[c * n + c];
    if (std::abs(d) < 1e-15) continue;
    for (int r = c + 1; r < n; ++r) {
      const double f = a[r * n + c] / d;
      if (f == 0.0) continue;
      for (int k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n, 0.0);
  for (int r = n - 1; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < n; ++k) s -= a[r * n + k] * x[k];
    x[r] = std::abs(a[r * n + r]) < 1e-15 ? 0.0 : s / a[r * n + r];
  }
  return x;
}

// Overlap (in chip units) of the window [u, u + width) with each chip of a
// cyclic n-chip sequence whose chip boundaries sit at integer + offset.
inline void chip_overlaps(double u, double width, double offset, int n, std::vector<double>& w) {
  std::fill(w.begin(), w.end(), 0.0);
  double a = u - offset;
  const double end = a + width;
  while (a < end - 1e-12) {
    const double cell = std::floor(a);
    const double b = std::min(end, cell + 1.0);
    int k = static_cast<int>(std::fmod(cell, n));
    if (k < 0) k += n;
    w[k] += b - a;
    a = b;
  }
}

}  // namespace detail

/// Recovers the cyclic chip sequence from exposure-window samples taken at
/// arbitrary times. Chip boundary phase is searched on a 1/64-chip grid and
/// chip levels are least-squares fits of the exposure model.
inline Chips fold_chips(const std::vector<TimedSample>& samples, double exposure, double chip_rate,
                        int n_chips = kFrameChips) {
  if (samples.empty()) throw InsufficientData("no samples to fold");
  const double period = n_chips / chip_rate;
  const double width = exposure * chip_rate;
  std::vector<double> w(n_chips);
  double best_cost = 1e300;
  double best_coverage = 0.0;
  Chips best;
  for (int step = 0; step < 64; ++step) {
    const double offset = step / 64.0;
    std::vector<double> ata(static_cast<std::size_t>(n_chips) * n_chips, 0.0), atb(n_chips, 0.0),
        coverage(n_chips, 0.0);
    for (const auto& s : samples) {
      const double u = std::fmod(s.t_start, period) * chip_rate;
      detail::chip_overlaps(u, width, offset, n_chips, w);
      for (int i = 0; i < n_chips; ++i) {
        if (w[i] == 0.0) continue;
        const double wi = w[i] / width;
        if (wi >= 0.5) coverage[i] += wi;
        atb[i] += wi * s.lum;
        for (int j = 0; j < n_chips; ++j) ata[i * n_chips + j] += wi * w[j] / width;
      }
    }
    const double min_cov = *std::min_element(coverage.begin(), coverage.end());
    const auto x = detail::solve_dense(ata, atb, n_chips);
    Chips chips(n_chips);
    for (int i = 0; i < n_chips; ++i) chips[i] = x[i] > 0.5 ? 1 : 0;
    double cost = 0.0;
    for (const auto& s : samples) {
      const double u = std::fmod(s.t_start, period) * chip_rate;
      detail::chip_overlaps(u, width, offset, n_chips, w);
      double pred = 0.0;
      for (int i = 0; i < n_chips; ++i) pred += w[i] / width * chips[i];
      cost += (pred - s.lum) * (pred - s.lum);
    }
    if (cost < best_cost - 1e-12) {
      best_cost = cost;
      best_coverage = min_cov;
      best = std::move(chips);
    }
  }
  if (best.empty() || best_coverage < 1.0) throw InsufficientData("samples do not cover every chip of the codeword");
  return best;
}

/// Per-pixel maximum over a stack of frames of the same view.
inline FrameScan max_projection(std::span<const FrameScan> frames) {
  if (frames.empty()) throw DomainError("empty frame stack");
  FrameScan out = frames.front();
  for (const auto& f : frames.subspan(1)) {
    if (f.width != out.width || f.height != out.height || f.rotation_deg != out.rotation_deg)
      throw DomainError("frame stack geometry mismatch");
    for (std::size_t k = 0; k < out.lum.size(); ++k) out.lum[k] = std::max(out.lum[k], f.lum[k]);
  }
  return out;
}

/// Decodes stationary LEDs from several consecutive frames. Blob geometry
/// comes from the max projection of the stack; every frame contributes one
/// time-stamped sample per read-out row of each blob.
inline FrameDecode decode_sequence(std::span<const FrameScan> frames, const DecoderConfig& cfg = {}) {
  FrameDecode out;
  const FrameScan stack = max_projection(frames);
  for (auto& blob : detect_rois(stack, cfg)) {
    const Region region = region_of(stack, blob.center_px);
    std::vector<TimedSample> samples;
    for (const auto& f : frames) {
      std::vector<double> sum(f.raw_rows, 0.0);
      std::vector<int> count(f.raw_rows, 0);
      for (const auto& p : blob.pixels) {
        const int r = readout_row(f, p[0], p[1]);
        sum[r] += f.at(p[0], p[1]);
        ++count[r];
      }
      for (int r = 0; r < f.raw_rows; ++r)
        if (count[r] > 0) samples.push_back({f.capture_t0 + r * f.row_time, sum[r] / count[r]});
    }
    try {
      Chips chips = fold_chips(samples, frames.front().exposure, cfg.chip_rate);
      const LocationId id{decode_stream(chips)};
      out.leds.push_back({id, std::move(blob), region, std::move(chips)});
    } catch (const std::exception& e) {
      out.failures.push_back({std::move(blob), region, e.what()});
    }
  }
  detail::order_by_region(out.leds);
  detail::order_by_region(out.failures);
  return out;
}

/// Link throughput: every LED delivers bits_per_led transmitted bits per
/// acquisition of frames_per_readout frames.
inline double throughput_bps(int n_leds, int bits_per_led, double fps, double frames_per_readout) {
  if (n_leds < 0 || bits_per_led < 0 || !(fps > 0.0) || !(frames_per_readout > 0.0))
    throw DomainError("throughput arguments out of range");
  return n_leds * bits_per_led * fps / frames_per_readout;
}

}  // namespace occnav
