#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <vector>

#include "rtfdoa/activity.hpp"
#include "test_support.hpp"

using namespace rtfdoa;

namespace {

// Independent form of the posterior: q p1 / (q p1 + (1 - q) p0) with complex Gaussian
// likelihoods of variance psd (1 + xi) and psd.
double posterior_oracle(double power, double psd, double q, double xi) {
  const double p1 = std::exp(-power / (psd * (1.0 + xi))) / (psd * (1.0 + xi));
  const double p0 = std::exp(-power / psd) / psd;
  return q * p1 / (q * p1 + (1.0 - q) * p0);
}

}  // namespace

TEST(Spp, MatchesLikelihoodRatio) {
  const SppConfig cfg;
  const double xi = std::pow(10.0, 1.5);
  for (double gamma : {0.0, 0.1, 0.5, 1.0, 2.0, 5.0}) {
    EXPECT_NEAR(spp(gamma * 3.0, 3.0, cfg), posterior_oracle(gamma * 3.0, 3.0, 0.5, xi), 1e-12) << gamma;
  }
}

TEST(Spp, SilenceValue) {
  const SppConfig cfg;
  const double xi = std::pow(10.0, 1.5);
  EXPECT_NEAR(spp(0.0, 1.0, cfg), 1.0 / (1.0 + (1.0 + xi)), 1e-15);
}

TEST(Spp, TendsToOneForLoudFrames) {
  const SppConfig cfg;
  EXPECT_GT(spp(1e3, 1.0, cfg), 1.0 - 1e-12);
  EXPECT_EQ(spp(1e300, 1.0, cfg), 1.0);
}

TEST(Spp, MonotoneAndBounded) {
  const SppConfig cfg;
  double prev = -1.0;
  for (int i = 0; i <= 400; ++i) {
    const double p = spp(0.05 * i, 1.0, cfg);
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
    EXPECT_GE(p, prev);
    prev = p;
  }
}

TEST(Spp, ClampsNonPositiveNoisePsd) {
  const SppConfig cfg;
  EXPECT_EQ(spp(1.0, 0.0, cfg), spp(1.0, cfg.noise_psd_floor, cfg));
  EXPECT_EQ(spp(1.0, -5.0, cfg), spp(1.0, cfg.noise_psd_floor, cfg));
  EXPECT_TRUE(std::isfinite(spp(0.0, 0.0, cfg)));
}

TEST(SppConfig, Validation) {
  SppConfig c;
  c.prior_speech_prob = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.threshold = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.init_frames = 0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ClassifyFrame, MeanAgainstThreshold) {
  const std::vector<double> mixed{0.6, 0.6, 0.3, 0.3};
  EXPECT_EQ(classify_frame(mixed, 0.5), ActivityLabel::NoiseOnly);
  const std::vector<double> loud{0.9, 0.8, 0.7, 0.2};
  EXPECT_EQ(classify_frame(loud, 0.5), ActivityLabel::SpeechPlusNoise);
  const std::vector<double> exact{0.5, 0.5};
  EXPECT_EQ(classify_frame(exact, 0.5), ActivityLabel::NoiseOnly);
  EXPECT_EQ(classify_frame({}, 0.5), ActivityLabel::NoiseOnly);
}

TEST(ClassifyFrame, ChannelOrderInvariant) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> p(4);
    for (double& v : p) v = u(rng);
    const auto ref = classify_frame(p, 0.5);
    std::sort(p.begin(), p.end());
    do {
      EXPECT_EQ(classify_frame(p, 0.5), ref);
    } while (std::next_permutation(p.begin(), p.end()));
  }
}

TEST(OracleLabels, MarginRule) {
  TFGrid clean(2, 3, 2), noise(2, 3, 2);
  // bin 0: speech 10 dB above noise; bin 1: equal; bin 2: speech 20 dB below noise.
  for (std::size_t l = 0; l < 2; ++l) {
    clean.at(0, 0, l) = std::sqrt(10.0);
    noise.at(0, 0, l) = 1.0;
    clean.at(0, 1, l) = Complex(0.0, 1.0);
    noise.at(0, 1, l) = 1.0;
    clean.at(0, 2, l) = 0.1;
    noise.at(0, 2, l) = 1.0;
    // Channel 1 is ignored.
    clean.at(1, 2, l) = 100.0;
  }
  const LabelGrid labels = oracle_labels(clean, noise, -10.0);
  for (std::size_t l = 0; l < 2; ++l) {
    EXPECT_EQ(labels.at(0, l), ActivityLabel::SpeechPlusNoise);
    EXPECT_EQ(labels.at(1, l), ActivityLabel::SpeechPlusNoise);
    EXPECT_EQ(labels.at(2, l), ActivityLabel::NoiseOnly);
  }
  const LabelGrid strict = oracle_labels(clean, noise, 0.0);
  EXPECT_EQ(strict.at(1, 0), ActivityLabel::NoiseOnly);
  EXPECT_EQ(strict.at(0, 0), ActivityLabel::SpeechPlusNoise);
}

TEST(OracleLabels, ShapeMismatch) {
  EXPECT_THROW(oracle_labels(TFGrid(1, 3, 4), TFGrid(1, 3, 5)), ConfigError);
  EXPECT_THROW(oracle_labels(TFGrid(0, 3, 4), TFGrid(0, 3, 4)), ConfigError);
}

TEST(SppLabels, SilenceThenBurst) {
  // Stationary complex noise with a loud burst in frames [60, 80) on every channel.
  std::mt19937_64 rng(2);
  TFGrid g(4, 8, 120);
  for (std::size_t m = 0; m < 4; ++m)
    for (std::size_t k = 0; k < 8; ++k)
      for (std::size_t l = 0; l < 120; ++l) {
        g.at(m, k, l) = rtfdoa::test::complex_normal(rng);
        if (l >= 60 && l < 80) g.at(m, k, l) *= 30.0;
      }
  const LabelGrid labels = spp_labels(g, 4, SppConfig{});
  std::size_t burst_hits = 0, quiet_hits = 0;
  for (std::size_t k = 0; k < 8; ++k)
    for (std::size_t l = 10; l < 120; ++l) {
      const bool speech = labels.at(k, l) == ActivityLabel::SpeechPlusNoise;
      if (l >= 60 && l < 80) burst_hits += speech;
      else if (l < 55 || l >= 100) quiet_hits += speech;
    }
  EXPECT_GE(burst_hits, 8u * 20u * 9u / 10u);
  EXPECT_LE(quiet_hits, 8u * 65u / 10u);
}

TEST(SppLabels, ExternalChannelIgnored) {
  std::mt19937_64 rng(3);
  TFGrid g(5, 4, 50);
  for (std::size_t m = 0; m < 5; ++m)
    for (std::size_t k = 0; k < 4; ++k)
      for (std::size_t l = 0; l < 50; ++l) g.at(m, k, l) = rtfdoa::test::complex_normal(rng);
  TFGrid loud_ext = g;
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t l = 0; l < 50; ++l) loud_ext.at(4, k, l) *= 1000.0;
  EXPECT_EQ(spp_labels(g, 4, SppConfig{}), spp_labels(loud_ext, 4, SppConfig{}));
  EXPECT_THROW(spp_labels(g, 6, SppConfig{}), ConfigError);
  EXPECT_THROW(spp_labels(g, 0, SppConfig{}), ConfigError);
}

TEST(LabelBitmap, RoundTripAndHeader) {
  const auto path = std::filesystem::temp_directory_path() / "rtfdoa_labels.bin";
  LabelGrid labels(257, 13);
  std::mt19937_64 rng(4);
  std::bernoulli_distribution coin(0.3);
  for (std::size_t k = 0; k < 257; ++k)
    for (std::size_t l = 0; l < 13; ++l)
      if (coin(rng)) labels.set(k, l, ActivityLabel::SpeechPlusNoise);
  write_label_bitmap(path, labels);
  EXPECT_EQ(read_label_bitmap(path), labels);

  std::ifstream in(path, std::ios::binary);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  ASSERT_EQ(bytes.size(), 16u + (257u * 13u + 7u) / 8u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "DOALBL01");
  EXPECT_EQ(bytes[8], 1);  // 257 = 0x0101
  EXPECT_EQ(bytes[9], 1);
  EXPECT_EQ(bytes[12], 13);
  const bool first = labels.at(0, 0) == ActivityLabel::SpeechPlusNoise;
  EXPECT_EQ(bytes[16] & 1u, first ? 1u : 0u);
  std::filesystem::remove(path);
}

TEST(LabelBitmap, RejectsBadFiles) {
  const auto path = std::filesystem::temp_directory_path() / "rtfdoa_labels_bad.bin";
  {
    std::ofstream os(path, std::ios::binary);
    os << "DOALBL01";
    const unsigned char dims[8] = {10, 0, 0, 0, 10, 0, 0, 0};
    os.write(reinterpret_cast<const char*>(dims), 8);
  }
  EXPECT_THROW(read_label_bitmap(path), ConfigError);
  {
    std::ofstream os(path, std::ios::binary);
    os << "NOTLABEL00000000";
  }
  EXPECT_THROW(read_label_bitmap(path), ConfigError);
  std::filesystem::remove(path);
}
