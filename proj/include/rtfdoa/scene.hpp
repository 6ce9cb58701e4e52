#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "json.hpp"

#include "rtfdoa/geometry.hpp"
#include "rtfdoa/stft.hpp"

namespace rtfdoa {

struct TrajectoryKnot {
  double time_s = 0.0;
  double azimuth_deg = 0.0;
};

enum class NoiseField {
  Spherical,    // plane waves on a spherical Fibonacci lattice (isotropic)
  Cylindrical,  // plane waves equally spaced in azimuth, horizontal plane only
  Corners4,     // four plane waves at +-45 and +-135 degrees
  Single,       // one plane wave; coherent negative control
};

enum class NoiseSpectrum { White, SpeechShaped };

/// Declarative description of a simulated scene. Sound sources are far-field plane waves.
struct SceneSpec {
  std::uint64_t seed = 0;
  double duration_s = 30.0;
  double sample_rate = 16000.0;
  ArrayGeometry geometry = ArrayGeometry::binaural_with_external(45.0, 1.6);
  std::vector<TrajectoryKnot> trajectory{{0.0, 35.0}};

  // Target signal: a supplied mono clip, or speech-shaped noise amplitude-modulated at
  // modulation_hz so that both speech-dominated and noise-dominated bins occur.
  std::optional<AudioClip> source_clip;
  double modulation_hz = 4.0;

  double snr_db = 0.0;  // +inf disables noise
  NoiseField noise_field = NoiseField::Spherical;
  int diffuse_order = 96;
  NoiseSpectrum noise_spectrum = NoiseSpectrum::White;
  double single_noise_azimuth_deg = 90.0;

  // Direct-to-diffuse ratio of a direction-independent diffuse copy of the target.
  std::optional<double> drr_db;
  int reverb_directions = 32;

  StftConfig stft;

  void validate() const;
  bool is_static() const;
  /// Azimuth at time t (linear between knots, held outside them), wrapped to [-180, 180).
  double azimuth_at(double t) const;

  static SceneSpec static_scene(double azimuth_deg, double snr_db, std::uint64_t seed, double duration_s = 30.0);
  /// -50 to 50 degrees over 25 s with the external microphone 1.5 m in front.
  static SceneSpec moving_scene(double snr_db, std::uint64_t seed);
};

/// Clean target and unit-gain noise before SNR scaling.
struct SceneComponents {
  AudioClip clean;
  AudioClip noise;  // empty channels when noise is disabled
  std::vector<double> truth_doa;   // per analysis frame, degrees
  std::vector<double> truth_time;  // per analysis frame, seconds
  std::vector<CVector> oracle_rtf;  // per bin, extended vector; static scenes only
  bool is_static = false;
};

struct SceneOutput {
  AudioClip mixed;
  AudioClip clean;
  AudioClip noise;
  std::vector<double> truth_doa;
  std::vector<double> truth_time;
  std::vector<CVector> oracle_rtf;
  bool is_static = false;
  double noise_gain = 0.0;
};

SceneComponents render_components(const SceneSpec& spec);

/// Scales the noise so the broadband speech-to-noise power ratio averaged over the front
/// microphones equals snr_db, then mixes. snr_db = +inf gives mixed == clean.
SceneOutput mix_at_snr(const SceneComponents& components, const ArrayGeometry& geometry, double snr_db);

SceneOutput synthesize(const SceneSpec& spec);

/// Head-mounted microphone indices treated as "front": the most forward microphone on each
/// side of the head (or the reference alone when no side can be told apart).
std::vector<std::size_t> front_mic_indices(const ArrayGeometry& geometry);

/// Magnitude-squared coherence between every microphone pair of a noise recording, next to
/// the spherically isotropic model sinc^2(omega d / c).
struct CoherenceCurves {
  std::vector<double> frequencies;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::vector<double> distances;
  std::vector<std::vector<double>> measured;  // [pair][bin]
  std::vector<std::vector<double>> model;     // [pair][bin]
};

/// Requires at least 10 s of audio.
CoherenceCurves diffuse_field_check(const AudioClip& noise, const ArrayGeometry& geometry, const StftConfig& cfg = {});

/// Reads a scene description. "seed" is required; see README for the schema. Relative WAV
/// paths are resolved against `base_dir`.
SceneSpec scene_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json scene_to_json(const SceneSpec& spec);

}  // namespace rtfdoa
