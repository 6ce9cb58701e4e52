#include "rtfdoa/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

namespace rtfdoa {

void SweepMatrix::validate() const {
  if (snr_db.empty() || drr_db.empty() || estimators.empty() || externals.empty() || source_azimuths.empty() ||
      seeds.empty()) {
    throw ConfigError("sweep matrix has an empty axis");
  }
  for (double s : snr_db) {
    if (std::isnan(s)) throw ConfigError("sweep SNR values must be numbers");
  }
  for (const auto& e : externals) {
    if (!(e.distance_m > 0.0)) throw ConfigError("external microphone distance must be positive");
  }
  if (!(grid_step_deg > 0.0)) throw ConfigError("grid step must be positive");
  run.validate();
}

std::size_t SweepMatrix::cell_count() const {
  return snr_db.size() * drr_db.size() * estimators.size() * externals.size() * source_azimuths.size() * seeds.size();
}

SweepMatrix sweep_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  SweepMatrix m;
  try {
    if (j.contains("scene")) {
      nlohmann::json scene = j.at("scene");
      if (!scene.contains("seed")) scene["seed"] = 0;
      m.scene = scene_from_json(scene, base_dir);
    }
    if (j.contains("snr_db")) m.snr_db = j.at("snr_db").get<std::vector<double>>();
    if (j.contains("drr_db")) {
      m.drr_db.clear();
      for (const auto& d : j.at("drr_db")) m.drr_db.push_back(d.is_null() ? std::nullopt : std::optional<double>(d.get<double>()));
    }
    if (j.contains("estimators")) {
      m.estimators.clear();
      for (const auto& e : j.at("estimators")) m.estimators.push_back(parse_estimator(e.get<std::string>()));
    }
    if (j.contains("external")) {
      m.externals.clear();
      for (const auto& e : j.at("external")) {
        m.externals.push_back({e.at("azimuth_deg").get<double>(), e.at("distance_m").get<double>()});
      }
    }
    if (j.contains("source_azimuths_deg")) m.source_azimuths = j.at("source_azimuths_deg").get<std::vector<double>>();
    if (j.contains("seeds")) m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("run")) m.run = run_config_from_json(j.at("run"), m.run);
    m.grid_step_deg = j.value("grid_step_deg", m.grid_step_deg);
    m.threads = j.value("threads", m.threads);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad sweep matrix: ") + e.what());
  }
  m.validate();
  return m;
}

namespace {

struct SceneGroup {
  ExternalPlacement external;
  std::optional<double> drr_db;
  double azimuth = 0.0;
  std::uint64_t seed = 0;
};

std::vector<SweepRow> run_group(const SweepMatrix& mx, const SceneGroup& g, const PrototypeDatabase& db) {
  SceneSpec spec = mx.scene;
  spec.seed = g.seed;
  spec.trajectory = {{0.0, g.azimuth}};
  spec.drr_db = g.drr_db;
  spec.geometry.external = direction_vector(g.external.azimuth_deg) * g.external.distance_m;
  spec.snr_db = mx.snr_db.front();

  std::vector<SweepRow> rows;
  const auto fail_all = [&](double snr, const std::string& what) {
    for (Estimator e : mx.estimators) {
      SweepRow r{snr, g.drr_db, e, g.external, g.azimuth, g.seed, false, what, {}};
      rows.push_back(std::move(r));
    }
  };

  std::optional<SceneComponents> comps;
  std::string render_error;
  try {
    comps = render_components(spec);
  } catch (const std::exception& e) {
    render_error = e.what();
  }

  for (double snr : mx.snr_db) {
    if (!comps) {
      fail_all(snr, render_error);
      continue;
    }
    try {
      const SceneOutput scene = mix_at_snr(*comps, spec.geometry, snr);
      const TFGrid tf = analyze(scene.mixed, spec.stft);
      std::optional<LabelGrid> oracle;
      if (mx.run.detector == Detector::Oracle) {
        oracle = oracle_labels(analyze(scene.clean, spec.stft), analyze(scene.noise, spec.stft), mx.run.oracle_margin_db);
      }
      const LabelGrid labels = detect(mx.run, tf, db.mics, oracle ? &*oracle : nullptr);

      LocalizeOptions opt;
      opt.smoothing = SmoothingConfig::from_time_constants(mx.run.tau_y, mx.run.tau_n, spec.stft.hop, spec.sample_rate);
      opt.form = mx.run.literal_noise_recursion ? RecursionForm::Literal : RecursionForm::Convex;
      opt.rtf = mx.run.rtf;
      opt.warmup_frames = warmup_frames(mx.run.tau_y, mx.run.tau_n, spec.stft.hop, spec.sample_rate);
      const std::size_t start = eval_start_frame(tf.frames(), mx.run.eval_start_fraction);
      opt.first_estimated_frame = start;
      const auto locs = localize(tf, labels, db, mx.estimators, opt);
      for (const auto& loc : locs) {
        SweepRow r{snr, g.drr_db, loc.estimator, g.external, g.azimuth, g.seed, true, {}, {}};
        r.metrics = score(loc.frames, scene.truth_doa, mx.run.tolerance_deg, start);
        r.metrics.noise_cov_reads = loc.noise_cov_reads;
        rows.push_back(std::move(r));
      }
    } catch (const std::exception& e) {
      fail_all(snr, e.what());
    }
  }
  return rows;
}

}  // namespace

SweepResult run_sweep(const SweepMatrix& mx, const SweepProgress& progress) {
  mx.validate();
  const auto directions = default_direction_grid(mx.grid_step_deg);
  const PrototypeDatabase db = generate_prototypes(mx.scene.geometry, directions, mx.scene.sample_rate, mx.scene.stft.fft_size());

  std::vector<SceneGroup> groups;
  for (const auto& ext : mx.externals) {
    for (const auto& drr : mx.drr_db) {
      for (double az : mx.source_azimuths) {
        for (std::uint64_t seed : mx.seeds) groups.push_back({ext, drr, az, seed});
      }
    }
  }

  std::vector<std::vector<SweepRow>> slots(groups.size());
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex progress_mutex;
  const auto worker = [&] {
    for (std::size_t i = next++; i < groups.size(); i = next++) {
      slots[i] = run_group(mx, groups[i], db);
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(++done, groups.size());
      }
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(mx.threads, static_cast<unsigned>(groups.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  std::vector<SweepRow> rows;
  for (auto& s : slots) {
    for (auto& r : s) rows.push_back(std::move(r));
  }
  return summarize(std::move(rows));
}

SweepResult summarize(std::vector<SweepRow> rows) {
  SweepResult out;
  out.rows = std::move(rows);
  using Key = std::tuple<double, double, double, int, double, int>;  // ext az, ext dist, drr, has-drr, snr, estimator
  struct Acc {
    std::size_t cells = 0, failed = 0, ok = 0;
    double acc = 0.0, rms = 0.0;
    std::size_t rms_n = 0;
  };
  std::map<std::pair<Key, std::optional<double>>, Acc> acc;
  for (const auto& r : out.rows) {
    const Key key{r.external.azimuth_deg, r.external.distance_m, r.drr_db.value_or(0.0), r.drr_db ? 1 : 0, r.snr_db,
                  static_cast<int>(r.estimator)};
    for (const std::optional<double> pos : {std::optional<double>(r.source_azimuth_deg), std::optional<double>()}) {
      Acc& a = acc[{key, pos}];
      ++a.cells;
      if (!r.ok) {
        ++a.failed;
        continue;
      }
      ++a.ok;
      a.acc += r.metrics.accuracy_pct;
      if (std::isfinite(r.metrics.rms_error_deg)) {
        a.rms += r.metrics.rms_error_deg;
        ++a.rms_n;
      }
    }
  }
  for (const auto& [k, a] : acc) {
    const auto& [key, pos] = k;
    SweepSummaryRow s;
    s.external = {std::get<0>(key), std::get<1>(key)};
    if (std::get<3>(key)) s.drr_db = std::get<2>(key);
    s.snr_db = std::get<4>(key);
    s.estimator = static_cast<Estimator>(std::get<5>(key));
    s.source_azimuth_deg = pos;
    s.cells = a.cells;
    s.failed = a.failed;
    s.mean_accuracy_pct = a.ok ? a.acc / static_cast<double>(a.ok) : std::nan("");
    s.mean_rms_error_deg = a.rms_n ? a.rms / static_cast<double>(a.rms_n) : std::nan("");
    out.summary.push_back(s);
  }
  return out;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  return os;
}

std::string num(double v, const char* spec = "%.6g") {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string opt_num(const std::optional<double>& v, const char* none) { return v ? num(*v) : none; }

}  // namespace

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result) {
  auto os = open_out(path);
  os << "snr_db,drr_db,estimator,ext_azimuth_deg,ext_distance_m,source_azimuth_deg,seed,status,accuracy_pct,"
        "rms_error_deg,invalid_frames,frames_scored,noise_cov_reads,error\n";
  for (const auto& r : result.rows) {
    std::string err = r.error;
    for (char& c : err) {
      if (c == ',' || c == '\n') c = ';';
    }
    os << num(r.snr_db) << ',' << opt_num(r.drr_db, "none") << ',' << to_string(r.estimator) << ','
       << num(r.external.azimuth_deg) << ',' << num(r.external.distance_m) << ',' << num(r.source_azimuth_deg) << ','
       << r.seed << ',' << (r.ok ? "ok" : "failed") << ',';
    if (r.ok) {
      os << num(r.metrics.accuracy_pct, "%.4f") << ',' << num(r.metrics.rms_error_deg, "%.4f") << ','
         << r.metrics.invalid_frames << ',' << r.metrics.frames_scored << ',' << r.metrics.noise_cov_reads.value_or(0);
    } else {
      os << ",,,,";
    }
    os << ',' << err << '\n';
  }
}

void write_summary_csv(const std::filesystem::path& path, const SweepResult& result) {
  auto os = open_out(path);
  os << "snr_db,drr_db,estimator,ext_azimuth_deg,ext_distance_m,source_azimuth_deg,cells,failed,mean_accuracy_pct,"
        "mean_rms_error_deg\n";
  for (const auto& s : result.summary) {
    os << num(s.snr_db) << ',' << opt_num(s.drr_db, "none") << ',' << to_string(s.estimator) << ','
       << num(s.external.azimuth_deg) << ',' << num(s.external.distance_m) << ',' << opt_num(s.source_azimuth_deg, "mean")
       << ',' << s.cells << ',' << s.failed << ',' << num(s.mean_accuracy_pct, "%.4f") << ','
       << num(s.mean_rms_error_deg, "%.4f") << '\n';
  }
}

void write_plot_csv(const std::filesystem::path& path, const SweepResult& result) {
  auto os = open_out(path);
  os << "series,x_snr_db,y_accuracy_pct\n";
  for (const auto& s : result.summary) {
    if (s.source_azimuth_deg) continue;
    std::string series = to_string(s.estimator) + " ext@" + num(s.external.azimuth_deg) + "deg/" +
                         num(s.external.distance_m) + "m";
    if (s.drr_db) series += " drr=" + num(*s.drr_db) + "dB";
    os << series << ',' << num(s.snr_db) << ',' << num(s.mean_accuracy_pct, "%.4f") << '\n';
  }
}

}  // namespace rtfdoa
