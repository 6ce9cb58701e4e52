#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rtfdoa/common.hpp"

namespace rtfdoa {

/// Multichannel real-valued audio, one vector per channel.
struct AudioClip {
  std::vector<std::vector<double>> samples;
  double sample_rate = 16000.0;

  std::size_t channels() const { return samples.size(); }
  std::size_t length() const { return samples.empty() ? 0 : samples.front().size(); }

  /// Throws ConfigError unless all channels have equal length and sample_rate > 0.
  void validate() const;
};

/// sqrt(0.5 - 0.5 cos(2 pi n / frame_len)); frame_len must be even and >= 2.
std::vector<double> sqrt_hann(std::size_t frame_len);

struct StftConfig {
  std::size_t frame_len = 512;  // 32 ms at 16 kHz, also the FFT size
  std::size_t hop = 256;
  std::vector<double> window = sqrt_hann(512);

  static StftConfig with_frame(std::size_t frame_len, std::size_t hop);

  std::size_t fft_size() const { return frame_len; }
  std::size_t bins() const { return frame_len / 2 + 1; }
  std::size_t frame_count(std::size_t length) const {
    return length < frame_len ? 0 : (length - frame_len) / hop + 1;
  }
  void validate() const;
};

/// Complex one-sided spectra, indexed (channel, bin, frame). Bin 0 is DC.
class TFGrid {
 public:
  TFGrid() = default;
  TFGrid(std::size_t channels, std::size_t bins, std::size_t frames)
      : channels_(channels), bins_(bins), frames_(frames), data_(channels * bins * frames) {}

  std::size_t channels() const { return channels_; }
  std::size_t bins() const { return bins_; }
  std::size_t frames() const { return frames_; }

  Complex& at(std::size_t m, std::size_t k, std::size_t l) { return data_[(m * bins_ + k) * frames_ + l]; }
  const Complex& at(std::size_t m, std::size_t k, std::size_t l) const {
    return data_[(m * bins_ + k) * frames_ + l];
  }
  /// All frames of one (channel, bin) pair, contiguous.
  std::span<const Complex> series(std::size_t m, std::size_t k) const {
    return {data_.data() + (m * bins_ + k) * frames_, frames_};
  }
  std::span<Complex> series(std::size_t m, std::size_t k) {
    return {data_.data() + (m * bins_ + k) * frames_, frames_};
  }
  std::span<const Complex> raw() const { return data_; }

 private:
  std::size_t channels_ = 0, bins_ = 0, frames_ = 0;
  std::vector<Complex> data_;
};

/// Windowed DFT of left-aligned frames; trailing samples short of a frame are dropped.
TFGrid analyze(const AudioClip& clip, const StftConfig& cfg = {});

/// Centre time in seconds of frame l.
inline double frame_time(std::size_t l, const StftConfig& cfg, double sample_rate) {
  return (static_cast<double>(l * cfg.hop) + 0.5 * static_cast<double>(cfg.frame_len)) / sample_rate;
}

}  // namespace rtfdoa
