#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "rtfdoa/stft.hpp"

namespace rtfdoa {

enum class ActivityLabel : std::uint8_t { NoiseOnly = 0, SpeechPlusNoise = 1 };

struct SppConfig {
  double prior_speech_prob = 0.5;
  double fixed_apriori_snr_db = 15.0;
  double threshold = 0.5;
  double noise_psd_floor = 1e-12;
  // Noise PSD tracking used by the SPP detector.
  double noise_smoothing = 0.8;
  std::size_t init_frames = 5;
  double stagnation_guard = 0.99;

  void validate() const;
};

/// Posterior speech presence probability under a fixed prior and fixed a-priori SNR.
/// noise_psd below the floor is clamped to the floor.
double spp(double noisy_power, double noise_psd, const SppConfig& cfg);

/// SpeechPlusNoise iff the mean of the per-channel probabilities exceeds the threshold.
ActivityLabel classify_frame(std::span<const double> probabilities, double threshold);

/// Per-TF-bin labels stored [bin x frame].
class LabelGrid {
 public:
  LabelGrid() = default;
  LabelGrid(std::size_t bins, std::size_t frames, ActivityLabel fill = ActivityLabel::NoiseOnly)
      : bins_(bins), frames_(frames), labels_(bins * frames, fill) {}

  std::size_t bins() const { return bins_; }
  std::size_t frames() const { return frames_; }
  ActivityLabel at(std::size_t k, std::size_t l) const { return labels_[k * frames_ + l]; }
  void set(std::size_t k, std::size_t l, ActivityLabel v) { labels_[k * frames_ + l] = v; }
  std::size_t count(ActivityLabel v) const;

  bool operator==(const LabelGrid&) const = default;

 private:
  std::size_t bins_ = 0, frames_ = 0;
  std::vector<ActivityLabel> labels_;
};

/// SpeechPlusNoise iff |X_1|^2 > margin * |N_1|^2 on the reference channel.
LabelGrid oracle_labels(const TFGrid& clean, const TFGrid& noise, double snr_margin_db = -10.0);

/// Causal SPP labelling over the first `head_channels` channels of a noisy grid. Each head
/// channel keeps its own recursively smoothed noise PSD, updated with the SPP-weighted
/// periodogram and initialised from the mean of the first `init_frames` frames.
LabelGrid spp_labels(const TFGrid& noisy, std::size_t head_channels, const SppConfig& cfg);

/// Bitmap file: "DOALBL01", K, L as uint32 little-endian, then one bit per bin in
/// row-major [k x l] order, least significant bit first; 1 = SpeechPlusNoise.
void write_label_bitmap(const std::filesystem::path& path, const LabelGrid& labels);
LabelGrid read_label_bitmap(const std::filesystem::path& path);

}  // namespace rtfdoa
