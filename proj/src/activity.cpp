#include "rtfdoa/activity.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numeric>

namespace rtfdoa {

void SppConfig::validate() const {
  if (!(prior_speech_prob > 0.0 && prior_speech_prob < 1.0)) throw ConfigError("SPP prior must lie in (0, 1)");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("SPP threshold must lie in (0, 1)");
  if (!(noise_psd_floor > 0.0)) throw ConfigError("SPP noise PSD floor must be positive");
  if (!(noise_smoothing >= 0.0 && noise_smoothing < 1.0)) throw ConfigError("SPP noise smoothing must lie in [0, 1)");
  if (init_frames == 0) throw ConfigError("SPP needs at least one initialisation frame");
}

double spp(double noisy_power, double noise_psd, const SppConfig& cfg) {
  const double psd = std::max(noise_psd, cfg.noise_psd_floor);
  const double xi = std::pow(10.0, cfg.fixed_apriori_snr_db / 10.0);
  const double q = cfg.prior_speech_prob;
  const double gamma = std::max(noisy_power, 0.0) / psd;
  const double odds = (1.0 - q) / q * (1.0 + xi) * std::exp(-gamma * xi / (1.0 + xi));
  return 1.0 / (1.0 + odds);
}

ActivityLabel classify_frame(std::span<const double> probabilities, double threshold) {
  if (probabilities.empty()) return ActivityLabel::NoiseOnly;
  const double mean =
      std::accumulate(probabilities.begin(), probabilities.end(), 0.0) / static_cast<double>(probabilities.size());
  return mean > threshold ? ActivityLabel::SpeechPlusNoise : ActivityLabel::NoiseOnly;
}

std::size_t LabelGrid::count(ActivityLabel v) const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), v));
}

LabelGrid oracle_labels(const TFGrid& clean, const TFGrid& noise, double snr_margin_db) {
  if (clean.channels() != noise.channels() || clean.bins() != noise.bins() || clean.frames() != noise.frames()) {
    throw ConfigError("oracle labels need speech and noise grids of identical shape");
  }
  if (clean.channels() == 0) throw ConfigError("oracle labels need at least one channel");
  const double margin = std::pow(10.0, snr_margin_db / 10.0);
  LabelGrid labels(clean.bins(), clean.frames());
  for (std::size_t k = 0; k < clean.bins(); ++k) {
    const auto x = clean.series(0, k);
    const auto n = noise.series(0, k);
    for (std::size_t l = 0; l < clean.frames(); ++l) {
      if (std::norm(x[l]) > margin * std::norm(n[l])) labels.set(k, l, ActivityLabel::SpeechPlusNoise);
    }
  }
  return labels;
}

LabelGrid spp_labels(const TFGrid& noisy, std::size_t head_channels, const SppConfig& cfg) {
  cfg.validate();
  if (head_channels == 0 || head_channels > noisy.channels()) throw ConfigError("invalid head channel count for SPP");
  const std::size_t frames = noisy.frames();
  LabelGrid labels(noisy.bins(), frames);
  const std::size_t init = std::min(cfg.init_frames, frames);
  std::vector<double> probs(head_channels);

  for (std::size_t k = 0; k < noisy.bins(); ++k) {
    std::vector<double> psd(head_channels, 0.0);
    std::vector<double> smoothed_p(head_channels, 0.0);
    for (std::size_t m = 0; m < head_channels; ++m) {
      const auto y = noisy.series(m, k);
      for (std::size_t l = 0; l < init; ++l) psd[m] += std::norm(y[l]);
      psd[m] = std::max(psd[m] / static_cast<double>(std::max<std::size_t>(init, 1)), cfg.noise_psd_floor);
    }
    for (std::size_t l = 0; l < frames; ++l) {
      for (std::size_t m = 0; m < head_channels; ++m) {
        const double power = std::norm(noisy.at(m, k, l));
        double p = spp(power, psd[m], cfg);
        // A probability stuck near one would freeze the noise estimate.
        smoothed_p[m] = 0.9 * smoothed_p[m] + 0.1 * p;
        if (smoothed_p[m] > cfg.stagnation_guard) p = std::min(p, cfg.stagnation_guard);
        probs[m] = p;
        const double noise_power = (1.0 - p) * power + p * psd[m];
        psd[m] = std::max(cfg.noise_smoothing * psd[m] + (1.0 - cfg.noise_smoothing) * noise_power, cfg.noise_psd_floor);
      }
      labels.set(k, l, classify_frame(probs, cfg.threshold));
    }
  }
  return labels;
}

namespace {
constexpr char kLabelMagic[8] = {'D', 'O', 'A', 'L', 'B', 'L', '0', '1'};
}

void write_label_bitmap(const std::filesystem::path& path, const LabelGrid& labels) {
  const std::size_t total = labels.bins() * labels.frames();
  std::vector<unsigned char> out(16 + (total + 7) / 8, 0);
  std::memcpy(out.data(), kLabelMagic, 8);
  const auto put = [&](std::size_t at, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out[at + i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFF);
  };
  put(8, static_cast<std::uint32_t>(labels.bins()));
  put(12, static_cast<std::uint32_t>(labels.frames()));
  std::size_t bit = 0;
  for (std::size_t k = 0; k < labels.bins(); ++k) {
    for (std::size_t l = 0; l < labels.frames(); ++l, ++bit) {
      if (labels.at(k, l) == ActivityLabel::SpeechPlusNoise) out[16 + bit / 8] |= static_cast<unsigned char>(1u << (bit % 8));
    }
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write label bitmap " + path.string());
  os.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
}

LabelGrid read_label_bitmap(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open label bitmap " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kLabelMagic, 8) != 0) {
    throw ConfigError(path.string() + " is not a label bitmap");
  }
  const auto get = [&](std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[at + i]) << (8 * i);
    return v;
  };
  const std::size_t bins = get(8), frames = get(12);
  if (bytes.size() < 16 + (bins * frames + 7) / 8) throw ConfigError(path.string() + ": truncated label bitmap");
  LabelGrid labels(bins, frames);
  std::size_t bit = 0;
  for (std::size_t k = 0; k < bins; ++k) {
    for (std::size_t l = 0; l < frames; ++l, ++bit) {
      if (bytes[16 + bit / 8] & (1u << (bit % 8))) labels.set(k, l, ActivityLabel::SpeechPlusNoise);
    }
  }
  return labels;
}

}  // namespace rtfdoa
