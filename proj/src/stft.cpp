#include "rtfdoa/stft.hpp"

#include <cmath>
#include <string>

#include "fft.hpp"

namespace rtfdoa {

void AudioClip::validate() const {
  if (!(sample_rate > 0.0)) throw ConfigError("sample rate must be positive");
  for (const auto& ch : samples) {
    if (ch.size() != length()) throw ConfigError("audio channels differ in length");
  }
}

std::vector<double> sqrt_hann(std::size_t frame_len) {
  if (frame_len < 2 || frame_len % 2 != 0) {
    throw ConfigError("sqrt-Hann length must be even and >= 2, got " + std::to_string(frame_len));
  }
  std::vector<double> w(frame_len);
  const double n_total = static_cast<double>(frame_len);
  for (std::size_t n = 0; n < frame_len; ++n) {
    const double v = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(n) / n_total);
    w[n] = std::sqrt(std::max(v, 0.0));
  }
  return w;
}

StftConfig StftConfig::with_frame(std::size_t frame_len, std::size_t hop) {
  StftConfig cfg;
  cfg.frame_len = frame_len;
  cfg.hop = hop;
  cfg.window = sqrt_hann(frame_len);
  return cfg;
}

void StftConfig::validate() const {
  if (frame_len == 0 || hop == 0 || hop > frame_len) throw ConfigError("STFT hop must satisfy 0 < hop <= frame_len");
  if (frame_len % 2 != 0) throw ConfigError("STFT frame length must be even");
  if (window.size() != frame_len) throw ConfigError("STFT window length must equal frame length");
  for (double w : window) {
    if (!(w >= 0.0 && w <= 1.0)) throw ConfigError("STFT window values must lie in [0, 1]");
  }
}

TFGrid analyze(const AudioClip& clip, const StftConfig& cfg) {
  clip.validate();
  cfg.validate();
  if (clip.channels() == 0 || clip.length() == 0) throw ConfigError("cannot analyze an empty clip");
  if (clip.length() < cfg.frame_len) {
    throw ConfigError("clip of " + std::to_string(clip.length()) + " samples is shorter than one frame (" +
                      std::to_string(cfg.frame_len) + ")");
  }
  for (const auto& ch : clip.samples) {
    for (double s : ch) {
      if (!std::isfinite(s)) throw ConfigError("clip contains non-finite samples");
    }
  }

  const std::size_t frames = cfg.frame_count(clip.length());
  const std::size_t bins = cfg.bins();
  TFGrid grid(clip.channels(), bins, frames);
  detail::RealFft fft(cfg.fft_size());
  std::vector<double> frame(cfg.frame_len);
  std::vector<Complex> spec(bins);

  for (std::size_t m = 0; m < clip.channels(); ++m) {
    const auto& x = clip.samples[m];
    for (std::size_t l = 0; l < frames; ++l) {
      const double* src = x.data() + l * cfg.hop;
      for (std::size_t n = 0; n < cfg.frame_len; ++n) frame[n] = src[n] * cfg.window[n];
      fft.forward(frame, spec);
      for (std::size_t k = 0; k < bins; ++k) grid.at(m, k, l) = spec[k];
    }
  }
  return grid;
}

}  // namespace rtfdoa
