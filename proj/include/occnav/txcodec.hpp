#pragma once

// Transmitter bit pipeline: 5-bit ID -> bi-phase Manchester chips -> framed
// codeword with the '11' start symbol -> cyclic ON/OFF optical waveform.

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "occnav/core_model.hpp"

namespace occnav {

using Chip = std::uint8_t;
using Chips = std::vector<Chip>;

inline constexpr int kIdBits = 5;
inline constexpr int kPayloadChips = 2 * kIdBits;
inline constexpr int kFrameChips = kPayloadChips + 2;

struct InvalidCodeword : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SyncError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Chips chips_from_string(std::string_view s) {
  Chips out;
  out.reserve(s.size());
  for (char c : s) {
    if (c != '0' && c != '1') throw DomainError("chip string must contain only 0/1");
    out.push_back(static_cast<Chip>(c - '0'));
  }
  return out;
}

inline std::string to_string(std::span<const Chip> chips) {
  std::string s;
  s.reserve(chips.size());
  for (Chip c : chips) s.push_back(c ? '1' : '0');
  return s;
}

/// Bit 1 -> '01', bit 0 -> '00', most significant bit first.
inline Chips encode_manchester(std::uint8_t bits) {
  if (bits >= 32) throw DomainError("ID must fit in 5 bits");
  Chips out;
  out.reserve(kPayloadChips);
  for (int k = kIdBits - 1; k >= 0; --k) {
    out.push_back(0);
    out.push_back(static_cast<Chip>((bits >> k) & 1u));
  }
  return out;
}

inline bool is_valid_payload(std::span<const Chip> payload) {
  if (payload.size() != kPayloadChips) return false;
  for (std::size_t k = 0; k < payload.size(); k += 2)
    if (payload[k] != 0 || payload[k + 1] > 1) return false;
  return true;
}

inline Chips frame_codeword(std::span<const Chip> payload) {
  if (!is_valid_payload(payload)) throw InvalidCodeword("payload is not a Manchester payload");
  Chips out;
  out.reserve(kFrameChips);
  out.push_back(1);
  out.push_back(1);
  for (Chip c : payload) out.push_back(c);
  return out;
}

inline std::uint8_t decode_manchester(std::span<const Chip> payload) {
  if (payload.size() != kPayloadChips) throw InvalidCodeword("payload must hold 10 chips");
  std::uint8_t bits = 0;
  for (std::size_t k = 0; k < payload.size(); k += 2) {
    if (payload[k] != 0)
      throw InvalidCodeword("chip pair '" + to_string(payload.subspan(k, 2)) + "' is not a symbol");
    bits = static_cast<std::uint8_t>((bits << 1) | (payload[k + 1] & 1u));
  }
  return bits;
}

inline Chips encode_id(std::uint8_t bits) { return frame_codeword(encode_manchester(bits)); }

/// Finds the offset of the '11' start symbol in a cyclically repeated chip
/// stream. A valid payload never contains '11', so at most one offset
/// within a frame period validates; the first such offset is returned.
inline std::size_t locate_start(std::span<const Chip> stream, std::size_t frame_len = kFrameChips) {
  const std::size_t n = stream.size();
  if (n < frame_len) throw SyncError("stream shorter than one codeword");
  Chips payload(frame_len - 2);
  for (std::size_t off = 0; off < n; ++off) {
    if (stream[off] != 1 || stream[(off + 1) % n] != 1) continue;
    for (std::size_t k = 0; k < payload.size(); ++k) payload[k] = stream[(off + 2 + k) % n];
    if (is_valid_payload(payload)) return off;
  }
  throw SyncError("no valid start symbol in stream");
}

/// Locates the start symbol and decodes the ID that follows it.
inline std::uint8_t decode_stream(std::span<const Chip> stream) {
  const std::size_t off = locate_start(stream);
  Chips payload(kPayloadChips);
  for (std::size_t k = 0; k < payload.size(); ++k) payload[k] = stream[(off + 2 + k) % stream.size()];
  return decode_manchester(payload);
}

/// Piecewise-constant cyclic ON/OFF intensity; chip k occupies
/// [k/chip_rate, (k+1)/chip_rate) and the sequence repeats.
class Waveform {
 public:
  Waveform(Chips chips, double chip_rate_hz, double phase_s = 0.0)
      : chips_(std::move(chips)), chip_rate_(chip_rate_hz), phase_(phase_s) {
    if (!(chip_rate_ > 0.0)) throw DomainError("chip rate must be positive");
    if (chips_.empty()) throw DomainError("waveform needs at least one chip");
    prefix_.assign(chips_.size() + 1, 0.0);
    for (std::size_t k = 0; k < chips_.size(); ++k) prefix_[k + 1] = prefix_[k] + chips_[k];
  }

  static Waveform constant_on() { return Waveform(Chips{1}, 1.0); }

  const Chips& chips() const { return chips_; }
  double chip_rate() const { return chip_rate_; }
  double chip_duration() const { return 1.0 / chip_rate_; }
  double period() const { return static_cast<double>(chips_.size()) / chip_rate_; }
  double phase() const { return phase_; }
  double duty_cycle() const { return prefix_.back() / static_cast<double>(chips_.size()); }

  double level(double t) const {
    const double u = wrap((t - phase_) * chip_rate_);
    return chips_[static_cast<std::size_t>(u) % chips_.size()];
  }

  /// Integral of the intensity over [t0, t1], in seconds of ON time.
  double integral(double t0, double t1) const { return on_time(t1) - on_time(t0); }

  /// Average intensity over [t, t + width].
  double mean(double t, double width) const { return integral(t, t + width) / width; }

 private:
  double wrap(double u) const {
    const double n = static_cast<double>(chips_.size());
    double r = std::fmod(u, n);
    if (r < 0.0) r += n;
    return r;
  }

  // Cumulative ON time since the (phase-shifted) origin.
  double on_time(double t) const {
    const double u = (t - phase_) * chip_rate_;
    const double n = static_cast<double>(chips_.size());
    const double cycles = std::floor(u / n);
    const double r = u - cycles * n;
    const auto k = std::min(static_cast<std::size_t>(r), chips_.size() - 1);
    const double chips_on = cycles * prefix_.back() + prefix_[k] + (r - k) * chips_[k];
    return chips_on / chip_rate_;
  }

  Chips chips_;
  double chip_rate_;
  double phase_;
  std::vector<double> prefix_;
};

inline Waveform chips_to_waveform(Chips chips, double chip_rate_hz) {
  return Waveform(std::move(chips), chip_rate_hz);
}

}  // namespace occnav
