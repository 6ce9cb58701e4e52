#include "rtfdoa/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fft.hpp"
#include "rtfdoa/wav.hpp"

namespace rtfdoa {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Independent, reproducible random stream per (scene seed, stream id).
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t id) : gen_(splitmix64(seed ^ splitmix64(id + 0x51ED27ull))) {}
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  // Zero-mean, unit-variance uniform sample.
  double white() { return (2.0 * uniform01() - 1.0) * std::sqrt(3.0); }

 private:
  std::mt19937_64 gen_;
};

enum StreamId : std::uint64_t { kSourceStream = 0, kReverbStream = 1, kNoiseStreamBase = 1000, kReverbSignalBase = 500 };

// Long-term speech-like spectral tilt: high-pass at 100 Hz, -6 dB/octave above 800 Hz.
double speech_shape(double f) {
  const double hp = (f / 100.0) * (f / 100.0);
  return std::sqrt(hp / (1.0 + hp) / (1.0 + (f / 800.0) * (f / 800.0)));
}

std::vector<Position> fibonacci_sphere(int count) {
  std::vector<Position> dirs;
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - (2.0 * i + 1.0) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return dirs;
}

std::vector<Position> noise_directions(const SceneSpec& spec) {
  switch (spec.noise_field) {
    case NoiseField::Spherical:
      return fibonacci_sphere(spec.diffuse_order);
    case NoiseField::Cylindrical: {
      std::vector<Position> dirs;
      for (int i = 0; i < spec.diffuse_order; ++i) dirs.push_back(direction_vector(-180.0 + 360.0 * i / spec.diffuse_order));
      return dirs;
    }
    case NoiseField::Corners4:
      return {direction_vector(45.0), direction_vector(135.0), direction_vector(-135.0), direction_vector(-45.0)};
    case NoiseField::Single:
      return {direction_vector(spec.single_noise_azimuth_deg)};
  }
  return {};
}

double wrap_deg(double a) {
  double w = std::fmod(a + 180.0, 360.0);
  if (w < 0.0) w += 360.0;
  return w - 180.0;
}

// Frame-wise STFT-domain renderer: sources are analysed, multiplied per frame and bin by a
// steering vector, accumulated per microphone, and resynthesised by weighted overlap-add.
class Renderer {
 public:
  Renderer(const SceneSpec& spec)
      : cfg_(spec.stft),
        fs_(spec.sample_rate),
        out_len_(static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate))),
        pad_(cfg_.frame_len),
        mics_(spec.geometry.positions()),
        head_count_(spec.geometry.head_count()),
        shadow_(spec.geometry.head_shadow),
        radius_(spec.geometry.head_radius),
        fft_(cfg_.fft_size()) {
    const std::size_t total = out_len_ + 2 * pad_;
    frames_ = (total - cfg_.frame_len + cfg_.hop - 1) / cfg_.hop + 1;
    padded_len_ = (frames_ - 1) * cfg_.hop + cfg_.frame_len;
    bins_ = cfg_.bins();
    accum_.assign(mics_.size() * frames_ * bins_, Complex(0.0, 0.0));
  }

  std::size_t padded_length() const { return padded_len_; }
  std::size_t frames() const { return frames_; }
  std::size_t bins() const { return bins_; }
  std::size_t pad() const { return pad_; }
  double omega(std::size_t k) const {
    return 2.0 * kPi * static_cast<double>(k) * fs_ / static_cast<double>(cfg_.fft_size());
  }
  double frequency(std::size_t k) const { return static_cast<double>(k) * fs_ / static_cast<double>(cfg_.fft_size()); }
  // Centre of render frame r relative to the start of the output signal.
  double frame_time(std::size_t r) const {
    return (static_cast<double>(r * cfg_.hop) + 0.5 * static_cast<double>(cfg_.frame_len) - static_cast<double>(pad_)) / fs_;
  }

  CVector steering(const Position& u, double w) const { return steering_vector(mics_, head_count_, u, w, shadow_, radius_); }

  // Steering per bin for a fixed direction: [bin][mic].
  std::vector<CVector> steering_table(const Position& u) const {
    std::vector<CVector> table(bins_);
    for (std::size_t k = 0; k < bins_; ++k) table[k] = steering(u, omega(k));
    return table;
  }

  void clear() { std::fill(accum_.begin(), accum_.end(), Complex(0.0, 0.0)); }

  // Adds signal (length padded_length()) arriving from per-frame steering tables, with an
  // optional per-bin spectral gain.
  template <typename SteeringFor>
  void add_source(std::span<const double> signal, SteeringFor&& steering_for, const std::vector<double>* gain = nullptr) {
    std::vector<double> frame(cfg_.frame_len);
    std::vector<Complex> spec(bins_);
    for (std::size_t r = 0; r < frames_; ++r) {
      const double* src = signal.data() + r * cfg_.hop;
      for (std::size_t n = 0; n < cfg_.frame_len; ++n) frame[n] = src[n] * cfg_.window[n];
      fft_.forward(frame, spec);
      if (gain) {
        for (std::size_t k = 0; k < bins_; ++k) spec[k] *= (*gain)[k];
      }
      const std::vector<CVector>& table = steering_for(r);
      for (std::size_t m = 0; m < mics_.size(); ++m) {
        Complex* dst = accum_.data() + (m * frames_ + r) * bins_;
        const auto mi = static_cast<Eigen::Index>(m);
        for (std::size_t k = 0; k < bins_; ++k) dst[k] += table[k](mi) * spec[k];
      }
    }
  }

  // Weighted overlap-add of the accumulated spectra, cropped to the output span.
  AudioClip resynthesise() {
    AudioClip clip;
    clip.sample_rate = fs_;
    clip.samples.assign(mics_.size(), std::vector<double>(out_len_, 0.0));
    std::vector<double> norm(padded_len_, 0.0);
    for (std::size_t r = 0; r < frames_; ++r) {
      for (std::size_t n = 0; n < cfg_.frame_len; ++n) norm[r * cfg_.hop + n] += cfg_.window[n] * cfg_.window[n];
    }
    std::vector<double> frame(cfg_.frame_len), full(padded_len_);
    const double scale = 1.0 / static_cast<double>(cfg_.fft_size());
    for (std::size_t m = 0; m < mics_.size(); ++m) {
      std::fill(full.begin(), full.end(), 0.0);
      for (std::size_t r = 0; r < frames_; ++r) {
        fft_.inverse(std::span<const Complex>(accum_.data() + (m * frames_ + r) * bins_, bins_), frame);
        double* dst = full.data() + r * cfg_.hop;
        for (std::size_t n = 0; n < cfg_.frame_len; ++n) dst[n] += frame[n] * scale * cfg_.window[n];
      }
      for (std::size_t n = 0; n < out_len_; ++n) {
        const double w = norm[n + pad_];
        clip.samples[m][n] = w > 1e-12 ? full[n + pad_] / w : 0.0;
      }
    }
    return clip;
  }

 private:
  StftConfig cfg_;
  double fs_;
  std::size_t out_len_, pad_;
  std::vector<Position> mics_;
  std::size_t head_count_;
  bool shadow_;
  double radius_;
  detail::RealFft fft_;
  std::size_t frames_ = 0, padded_len_ = 0, bins_ = 0;
  std::vector<Complex> accum_;  // [mic][frame][bin]
};

double front_power(const AudioClip& clip, const std::vector<std::size_t>& front) {
  double p = 0.0;
  for (std::size_t m : front) {
    double s = 0.0;
    for (double v : clip.samples[m]) s += v * v;
    p += s / static_cast<double>(std::max<std::size_t>(clip.length(), 1));
  }
  return p / static_cast<double>(front.size());
}

}  // namespace

void SceneSpec::validate() const {
  geometry.validate();
  if (!(duration_s > 0.0)) throw ConfigError("scene duration must be positive");
  if (!(sample_rate > 0.0)) throw ConfigError("scene sample rate must be positive");
  if (trajectory.empty()) throw ConfigError("scene trajectory needs at least one knot");
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    if (trajectory[i].time_s < trajectory[i - 1].time_s) throw ConfigError("trajectory knots must be time-sorted");
  }
  if ((noise_field == NoiseField::Spherical || noise_field == NoiseField::Cylindrical) && diffuse_order < 8) {
    throw ConfigError("diffuse noise needs at least 8 plane waves");
  }
  if (drr_db && reverb_directions < 1) throw ConfigError("reverberation needs at least one direction");
  if (std::isnan(snr_db)) throw ConfigError("SNR must be a number or +inf");
  stft.validate();
  if (static_cast<std::size_t>(std::llround(duration_s * sample_rate)) < stft.frame_len) {
    throw ConfigError("scene shorter than one STFT frame");
  }
  if (source_clip) {
    if (source_clip->channels() == 0) throw ConfigError("source clip has no channels");
    if (source_clip->sample_rate != sample_rate) throw ConfigError("source clip sample rate differs from scene rate");
  }
}

bool SceneSpec::is_static() const {
  return std::all_of(trajectory.begin(), trajectory.end(),
                     [&](const TrajectoryKnot& k) { return k.azimuth_deg == trajectory.front().azimuth_deg; });
}

double SceneSpec::azimuth_at(double t) const {
  if (t <= trajectory.front().time_s) return wrap_deg(trajectory.front().azimuth_deg);
  if (t >= trajectory.back().time_s) return wrap_deg(trajectory.back().azimuth_deg);
  for (std::size_t i = 1; i < trajectory.size(); ++i) {
    const auto& a = trajectory[i - 1];
    const auto& b = trajectory[i];
    if (t <= b.time_s) {
      const double span = b.time_s - a.time_s;
      const double f = span > 0.0 ? (t - a.time_s) / span : 1.0;
      return wrap_deg(a.azimuth_deg + f * (b.azimuth_deg - a.azimuth_deg));
    }
  }
  return wrap_deg(trajectory.back().azimuth_deg);
}

SceneSpec SceneSpec::static_scene(double azimuth_deg, double snr_db, std::uint64_t seed, double duration_s) {
  SceneSpec s;
  s.seed = seed;
  s.duration_s = duration_s;
  s.snr_db = snr_db;
  s.trajectory = {{0.0, azimuth_deg}};
  return s;
}

SceneSpec SceneSpec::moving_scene(double snr_db, std::uint64_t seed) {
  SceneSpec s;
  s.seed = seed;
  s.duration_s = 25.0;
  s.snr_db = snr_db;
  s.geometry = ArrayGeometry::binaural_with_external(0.0, 1.5);
  s.trajectory = {{0.0, -50.0}, {25.0, 50.0}};
  return s;
}

std::vector<std::size_t> front_mic_indices(const ArrayGeometry& geometry) {
  std::optional<std::size_t> left, right;
  for (std::size_t m = 0; m < geometry.head.size(); ++m) {
    const Position& p = geometry.head[m];
    if (p.y() > 0.0 && (!left || p.x() > geometry.head[*left].x())) left = m;
    if (p.y() < 0.0 && (!right || p.x() > geometry.head[*right].x())) right = m;
  }
  std::vector<std::size_t> front;
  if (left) front.push_back(*left);
  if (right) front.push_back(*right);
  if (front.empty()) front.push_back(0);
  return front;
}

SceneComponents render_components(const SceneSpec& spec) {
  spec.validate();
  Renderer renderer(spec);
  const std::size_t padded = renderer.padded_length();
  const std::size_t bins = renderer.bins();
  const std::size_t pad = renderer.pad();
  const std::size_t out_len = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate));

  std::vector<double> shape(bins);
  for (std::size_t k = 0; k < bins; ++k) shape[k] = speech_shape(renderer.frequency(k));

  // Target signal over the padded time span.
  std::vector<double> source(padded, 0.0);
  if (spec.source_clip) {
    const auto& ch = spec.source_clip->samples.front();
    for (std::size_t n = 0; n < std::min(out_len, ch.size()); ++n) source[n + pad] = ch[n];
  } else {
    Stream rng(spec.seed, kSourceStream);
    std::vector<double> white(padded);
    for (double& v : white) v = rng.white();
    // Spectral shaping through the same analysis/resynthesis path, single channel.
    SceneSpec mono = spec;
    mono.geometry = ArrayGeometry::binaural_default();
    Renderer shaper(mono);
    CVector unit = CVector::Ones(static_cast<Eigen::Index>(mono.geometry.positions().size()));
    const std::vector<CVector> flat(bins, unit);
    shaper.add_source(white, [&](std::size_t) -> const std::vector<CVector>& { return flat; }, &shape);
    const AudioClip shaped = shaper.resynthesise();
    for (std::size_t n = 0; n < out_len; ++n) {
      const double t = static_cast<double>(n) / spec.sample_rate;
      const double env = std::sin(kPi * spec.modulation_hz * t);
      source[n + pad] = shaped.samples[0][n] * env * env;
    }
  }

  // Direct path, steered per render frame.
  std::vector<std::vector<CVector>> tables;
  std::vector<std::size_t> table_of_frame(renderer.frames());
  {
    double last_az = std::numeric_limits<double>::quiet_NaN();
    for (std::size_t r = 0; r < renderer.frames(); ++r) {
      const double az = spec.azimuth_at(renderer.frame_time(r));
      if (tables.empty() || az != last_az) {
        tables.push_back(renderer.steering_table(direction_vector(az)));
        last_az = az;
      }
      table_of_frame[r] = tables.size() - 1;
    }
  }
  renderer.add_source(source, [&](std::size_t r) -> const std::vector<CVector>& { return tables[table_of_frame[r]]; });
  SceneComponents out;
  out.clean = renderer.resynthesise();

  const std::vector<std::size_t> front = front_mic_indices(spec.geometry);

  if (spec.drr_db) {
    renderer.clear();
    Stream rng(spec.seed, kReverbStream);
    const auto dirs = fibonacci_sphere(spec.reverb_directions);
    const auto min_delay = static_cast<std::size_t>(0.01 * spec.sample_rate);
    const auto max_delay = static_cast<std::size_t>(0.08 * spec.sample_rate);
    std::vector<double> delayed(padded);
    for (const Position& u : dirs) {
      const std::size_t delay =
          min_delay + static_cast<std::size_t>(rng.uniform01() * static_cast<double>(max_delay - min_delay + 1));
      const double gain = 0.5 + 0.5 * rng.uniform01();
      std::fill(delayed.begin(), delayed.end(), 0.0);
      for (std::size_t n = delay; n < padded; ++n) delayed[n] = gain * source[n - delay];
      const auto table = renderer.steering_table(u);
      renderer.add_source(delayed, [&](std::size_t) -> const std::vector<CVector>& { return table; });
    }
    AudioClip diffuse = renderer.resynthesise();
    const double pd = front_power(out.clean, front), pr = front_power(diffuse, front);
    if (pr > 0.0) {
      const double g = std::sqrt(pd / (pr * std::pow(10.0, *spec.drr_db / 10.0)));
      for (std::size_t m = 0; m < out.clean.channels(); ++m) {
        for (std::size_t n = 0; n < out_len; ++n) out.clean.samples[m][n] += g * diffuse.samples[m][n];
      }
    }
  }

  if (std::isfinite(spec.snr_db)) {
    renderer.clear();
    const auto dirs = noise_directions(spec);
    std::vector<double> white(padded);
    const double per_wave = 1.0 / std::sqrt(static_cast<double>(dirs.size()));
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      Stream rng(spec.seed, kNoiseStreamBase + i);
      for (double& v : white) v = per_wave * rng.white();
      const auto table = renderer.steering_table(dirs[i]);
      renderer.add_source(white, [&](std::size_t) -> const std::vector<CVector>& { return table; },
                          spec.noise_spectrum == NoiseSpectrum::SpeechShaped ? &shape : nullptr);
    }
    out.noise = renderer.resynthesise();
  } else {
    out.noise.sample_rate = spec.sample_rate;
    out.noise.samples.assign(out.clean.channels(), std::vector<double>(out_len, 0.0));
  }

  const std::size_t frames = spec.stft.frame_count(out_len);
  for (std::size_t l = 0; l < frames; ++l) {
    const double t = frame_time(l, spec.stft, spec.sample_rate);
    out.truth_time.push_back(t);
    out.truth_doa.push_back(spec.azimuth_at(t));
  }
  out.is_static = spec.is_static();
  if (out.is_static) {
    const Position u = direction_vector(spec.trajectory.front().azimuth_deg);
    for (std::size_t k = 0; k < bins; ++k) {
      const CVector h = renderer.steering(u, renderer.omega(k));
      out.oracle_rtf.push_back(h / h(0));
    }
  }
  return out;
}

SceneOutput mix_at_snr(const SceneComponents& components, const ArrayGeometry& geometry, double snr_db) {
  SceneOutput out;
  out.clean = components.clean;
  out.truth_doa = components.truth_doa;
  out.truth_time = components.truth_time;
  out.oracle_rtf = components.oracle_rtf;
  out.is_static = components.is_static;
  out.noise.sample_rate = components.clean.sample_rate;
  out.noise.samples.assign(out.clean.channels(), std::vector<double>(out.clean.length(), 0.0));

  if (std::isfinite(snr_db)) {
    const auto front = front_mic_indices(geometry);
    const double ps = front_power(components.clean, front);
    const double pn = front_power(components.noise, front);
    if (!(ps > 0.0) || !(pn > 0.0)) throw ConfigError("cannot set SNR: speech or noise power is zero");
    out.noise_gain = std::sqrt(ps / (pn * std::pow(10.0, snr_db / 10.0)));
    for (std::size_t m = 0; m < out.noise.channels(); ++m) {
      for (std::size_t n = 0; n < out.noise.length(); ++n) out.noise.samples[m][n] = out.noise_gain * components.noise.samples[m][n];
    }
  } else if (!(snr_db > 0.0)) {
    throw ConfigError("SNR must be finite or +inf");
  }

  out.mixed = out.clean;
  for (std::size_t m = 0; m < out.mixed.channels(); ++m) {
    for (std::size_t n = 0; n < out.mixed.length(); ++n) out.mixed.samples[m][n] += out.noise.samples[m][n];
  }
  return out;
}

SceneOutput synthesize(const SceneSpec& spec) { return mix_at_snr(render_components(spec), spec.geometry, spec.snr_db); }

CoherenceCurves diffuse_field_check(const AudioClip& noise, const ArrayGeometry& geometry, const StftConfig& cfg) {
  noise.validate();
  if (static_cast<double>(noise.length()) < 10.0 * noise.sample_rate) {
    throw ConfigError("coherence check needs at least 10 s of noise");
  }
  const auto mics = geometry.positions();
  if (noise.channels() != mics.size()) throw ConfigError("noise channel count does not match the geometry");
  const TFGrid tf = analyze(noise, cfg);

  CoherenceCurves out;
  for (std::size_t k = 0; k < tf.bins(); ++k) {
    out.frequencies.push_back(static_cast<double>(k) * noise.sample_rate / static_cast<double>(cfg.fft_size()));
  }
  for (std::size_t i = 0; i < mics.size(); ++i) {
    for (std::size_t j = i + 1; j < mics.size(); ++j) {
      const double d = (mics[i] - mics[j]).norm();
      std::vector<double> measured(tf.bins()), model(tf.bins());
      for (std::size_t k = 0; k < tf.bins(); ++k) {
        const auto a = tf.series(i, k), b = tf.series(j, k);
        Complex cross(0.0, 0.0);
        double pa = 0.0, pb = 0.0;
        for (std::size_t l = 0; l < tf.frames(); ++l) {
          cross += a[l] * std::conj(b[l]);
          pa += std::norm(a[l]);
          pb += std::norm(b[l]);
        }
        measured[k] = (pa > 0.0 && pb > 0.0) ? std::norm(cross) / (pa * pb) : 0.0;
        const double x = 2.0 * kPi * out.frequencies[k] * d / kSpeedOfSound;
        const double sinc = x == 0.0 ? 1.0 : std::sin(x) / x;
        model[k] = sinc * sinc;
      }
      out.pairs.emplace_back(i, j);
      out.distances.push_back(d);
      out.measured.push_back(std::move(measured));
      out.model.push_back(std::move(model));
    }
  }
  return out;
}

namespace {

const char* field_name(NoiseField f) {
  switch (f) {
    case NoiseField::Spherical: return "spherical";
    case NoiseField::Cylindrical: return "cylindrical";
    case NoiseField::Corners4: return "corners4";
    case NoiseField::Single: return "single";
  }
  return "spherical";
}

NoiseField field_from(const std::string& s) {
  if (s == "spherical") return NoiseField::Spherical;
  if (s == "cylindrical") return NoiseField::Cylindrical;
  if (s == "corners4") return NoiseField::Corners4;
  if (s == "single") return NoiseField::Single;
  throw ConfigError("unknown noise field '" + s + "'");
}

double snr_from(const nlohmann::json& j) {
  if (j.is_null()) return std::numeric_limits<double>::infinity();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "off") return std::numeric_limits<double>::infinity();
    throw ConfigError("snr_db must be a number, null, or \"inf\"");
  }
  return j.get<double>();
}

}  // namespace

SceneSpec scene_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  SceneSpec s;
  try {
    if (!j.contains("seed")) throw ConfigError("scene description must set \"seed\"");
    s.seed = j.at("seed").get<std::uint64_t>();
    s.duration_s = j.value("duration_s", s.duration_s);
    s.sample_rate = j.value("sample_rate", s.sample_rate);
    if (j.contains("geometry")) s.geometry = geometry_from_json(j.at("geometry"));
    if (j.contains("trajectory")) {
      s.trajectory.clear();
      for (const auto& k : j.at("trajectory")) {
        if (k.is_array()) {
          s.trajectory.push_back({k.at(0).get<double>(), k.at(1).get<double>()});
        } else {
          s.trajectory.push_back({k.at("time_s").get<double>(), k.at("azimuth_deg").get<double>()});
        }
      }
    }
    if (j.contains("source")) {
      const auto& src = j.at("source");
      const std::string type = src.value("type", std::string("speech_shaped"));
      if (type == "wav") {
        std::filesystem::path p = src.at("path").get<std::string>();
        if (p.is_relative()) p = base_dir / p;
        s.source_clip = read_wav(p);
      } else if (type != "speech_shaped") {
        throw ConfigError("unknown source type '" + type + "'");
      }
      s.modulation_hz = src.value("modulation_hz", s.modulation_hz);
    }
    if (j.contains("snr_db")) s.snr_db = snr_from(j.at("snr_db"));
    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      s.noise_field = field_from(n.value("field", std::string("spherical")));
      s.diffuse_order = n.value("order", s.diffuse_order);
      const std::string spectrum = n.value("spectrum", std::string("white"));
      if (spectrum == "white") {
        s.noise_spectrum = NoiseSpectrum::White;
      } else if (spectrum == "speech_shaped") {
        s.noise_spectrum = NoiseSpectrum::SpeechShaped;
      } else {
        throw ConfigError("unknown noise spectrum '" + spectrum + "'");
      }
      s.single_noise_azimuth_deg = n.value("azimuth_deg", s.single_noise_azimuth_deg);
    }
    if (j.contains("reverb") && !j.at("reverb").is_null()) {
      const auto& r = j.at("reverb");
      if (r.contains("drr_db") && !r.at("drr_db").is_null()) s.drr_db = r.at("drr_db").get<double>();
      s.reverb_directions = r.value("directions", s.reverb_directions);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad scene description: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json scene_to_json(const SceneSpec& s) {
  nlohmann::json traj = nlohmann::json::array();
  for (const auto& k : s.trajectory) traj.push_back({k.time_s, k.azimuth_deg});
  nlohmann::json j{{"seed", s.seed},
                   {"duration_s", s.duration_s},
                   {"sample_rate", s.sample_rate},
                   {"geometry", geometry_to_json(s.geometry)},
                   {"trajectory", traj},
                   {"source", {{"type", s.source_clip ? "wav" : "speech_shaped"}, {"modulation_hz", s.modulation_hz}}},
                   {"noise",
                    {{"field", field_name(s.noise_field)},
                     {"order", s.diffuse_order},
                     {"spectrum", s.noise_spectrum == NoiseSpectrum::White ? "white" : "speech_shaped"},
                     {"azimuth_deg", s.single_noise_azimuth_deg}}}};
  j["snr_db"] = std::isfinite(s.snr_db) ? nlohmann::json(s.snr_db) : nlohmann::json(nullptr);
  j["reverb"] = s.drr_db ? nlohmann::json{{"drr_db", *s.drr_db}, {"directions", s.reverb_directions}}
                         : nlohmann::json(nullptr);
  return j;
}

}  // namespace rtfdoa
