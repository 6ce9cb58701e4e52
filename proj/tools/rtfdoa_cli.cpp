// rtfdoa: prototypes | simulate | estimate | evaluate | sweep
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure, 1 anything else.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "rtfdoa/activity.hpp"
#include "rtfdoa/pipeline.hpp"
#include "rtfdoa/prototypes.hpp"
#include "rtfdoa/scene.hpp"
#include "rtfdoa/sweep.hpp"
#include "rtfdoa/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rtfdoa;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << j.dump(2) << '\n';
}

fs::path ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

struct PrototypeArgs {
  std::string geometry;
  double step = 5.0;
  double sample_rate = 16000.0;
  std::size_t fft_size = 512;
  bool head_shadow = false;
  std::string out = "prototypes.bin";
};

void cmd_prototypes(const PrototypeArgs& a) {
  ArrayGeometry g = a.geometry.empty() ? ArrayGeometry::binaural_default() : geometry_from_json(read_json(a.geometry));
  if (a.head_shadow) g.head_shadow = true;
  const auto db = generate_prototypes(g, default_direction_grid(a.step), a.sample_rate, a.fft_size);
  save_prototypes(a.out, db);
  std::cout << "wrote " << a.out << ": " << db.directions.size() << " directions x " << db.bins << " bins x " << db.mics
            << " mics\n";
}

struct SimulateArgs {
  std::string scene;
  std::string out_dir = "scene";
  std::optional<double> snr_db;
  bool pcm16 = false;
};

void cmd_simulate(const SimulateArgs& a) {
  const fs::path scene_path = a.scene;
  SceneSpec spec = scene_from_json(read_json(scene_path), scene_path.parent_path());
  if (a.snr_db) spec.snr_db = *a.snr_db;
  spec.validate();
  const SceneOutput out = synthesize(spec);
  const fs::path dir = ensure_dir(a.out_dir);
  const auto format = a.pcm16 ? WavSampleFormat::Pcm16 : WavSampleFormat::Float32;
  write_wav(dir / "mixed.wav", out.mixed, format);
  write_wav(dir / "clean.wav", out.clean, format);
  write_wav(dir / "noise.wav", out.noise, format);
  write_truth_csv(dir / "truth.csv", out.truth_doa, out.truth_time);
  const LabelGrid labels = oracle_labels(analyze(out.clean, spec.stft), analyze(out.noise, spec.stft));
  write_label_bitmap(dir / "labels.bin", labels);
  write_json(dir / "scene.json", scene_to_json(spec));
  std::cout << "wrote " << dir.string() << ": " << out.mixed.channels() << " channels, " << out.truth_doa.size()
            << " frames\n";
}

struct RunArgs {
  std::string config;
  std::string scenario = "static";
  std::optional<std::string> estimator, detector;
  std::optional<double> tau_y, tau_n, eval_start_fraction, tolerance;
  bool literal = false;
};

// Defaults for the scenario, then the JSON config, then command-line flags.
RunConfig resolve(const RunArgs& a) {
  RunConfig cfg;
  if (a.scenario == "moving") {
    cfg = RunConfig::moving_defaults();
  } else if (a.scenario == "static") {
    cfg = RunConfig::static_defaults();
  } else {
    throw ConfigError("scenario must be static or moving");
  }
  if (!a.config.empty()) cfg = run_config_from_json(read_json(a.config), cfg);
  if (a.estimator) cfg.estimator = parse_estimator(*a.estimator);
  if (a.detector) cfg.detector = parse_detector(*a.detector);
  if (a.tau_y) cfg.tau_y = *a.tau_y;
  if (a.tau_n) cfg.tau_n = *a.tau_n;
  if (a.eval_start_fraction) cfg.eval_start_fraction = *a.eval_start_fraction;
  if (a.tolerance) cfg.tolerance_deg = *a.tolerance;
  if (a.literal) cfg.literal_noise_recursion = true;
  cfg.validate();
  return cfg;
}

struct EstimateArgs {
  RunArgs run;
  std::string mixed;
  std::string db;
  std::string labels;
  std::string truth;
  std::string out_dir = "estimate";
  bool cost_surface = false;
};

int cmd_estimate(const EstimateArgs& a) {
  const RunConfig cfg = resolve(a.run);
  const AudioClip mixed = read_wav(a.mixed);
  if (mixed.sample_rate != 16000.0) {
    std::fprintf(stderr, "warning: %s is sampled at %g Hz; defaults are tuned for 16 kHz\n", a.mixed.c_str(),
                 mixed.sample_rate);
  }
  const PrototypeDatabase db = a.db.empty()
                                   ? generate_prototypes(ArrayGeometry::binaural_default(), default_direction_grid(5.0),
                                                         mixed.sample_rate, 512)
                                   : load_prototypes(a.db);
  std::optional<LabelGrid> labels;
  if (!a.labels.empty()) labels = read_label_bitmap(a.labels);
  std::optional<std::vector<double>> truth;
  if (!a.truth.empty()) truth = read_truth_csv(a.truth);

  RunInputs in;
  in.mixed = &mixed;
  in.oracle_labels = labels ? &*labels : nullptr;
  in.truth_deg = truth ? &*truth : nullptr;
  const RunResult r = run(cfg, in, db, a.cost_surface);

  const fs::path dir = ensure_dir(a.out_dir);
  write_doa_csv(dir / "doa.csv", r.localization.frames, r.frame_times);
  json resolved = run_config_to_json(cfg);
  resolved["prototypes"] = a.db.empty() ? json("generated:" + db.geometry_id) : json(a.db);
  write_json(dir / "config.json", resolved);
  write_json(dir / "timing.json", {{"processing_s", r.timing.processing_s},
                                   {"signal_s", r.timing.signal_s},
                                   {"real_time_factor", r.timing.real_time_factor()}});
  if (r.metrics) {
    json m = metrics_to_json(*r.metrics);
    m["estimator"] = to_string(cfg.estimator);
    m["warmup_frames"] = r.warmup_frames;
    write_json(dir / "metrics.json", m);
    std::printf("%s: accuracy %.2f%%\n", to_string(cfg.estimator).c_str(), r.metrics->accuracy_pct);
  }
  if (r.localization.surface) write_cost_surface_csv(dir / "cost_surface.csv", *r.localization.surface, db.directions);
  std::cout << "wrote " << (dir / "doa.csv").string() << '\n';
  return 0;
}

struct EvaluateArgs {
  RunArgs run;
  std::string doa;
  std::string truth;
  std::string out;
};

void cmd_evaluate(EvaluateArgs a) {
  const auto estimates = read_doa_csv(a.doa);
  const auto truth = read_truth_csv(a.truth);
  if (a.run.scenario == "auto") {
    const bool moving = std::any_of(truth.begin(), truth.end(), [&](double t) { return t != truth.front(); });
    a.run.scenario = moving ? "moving" : "static";
  }
  const RunConfig cfg = resolve(a.run);
  const Metrics m = score(estimates, truth, cfg.tolerance_deg, eval_start_frame(estimates.size(), cfg.eval_start_fraction));
  json j = metrics_to_json(m);
  j["scenario"] = a.run.scenario;
  if (a.out.empty()) {
    std::cout << j.dump(2) << '\n';
  } else {
    write_json(a.out, j);
    std::printf("accuracy %.2f%% over %zu frames\n", m.accuracy_pct, m.frames_scored);
  }
}

struct SweepArgs {
  std::string matrix;
  std::string out_dir = "sweep";
  std::optional<unsigned> threads;
  bool quiet = false;
};

void cmd_sweep(const SweepArgs& a) {
  const fs::path matrix_path = a.matrix;
  SweepMatrix m = sweep_from_json(read_json(matrix_path), matrix_path.parent_path());
  if (a.threads) m.threads = *a.threads;
  const SweepResult r = run_sweep(m, [&](std::size_t done, std::size_t total) {
    if (!a.quiet) std::fprintf(stderr, "scene %zu/%zu\n", done, total);
  });
  const fs::path dir = ensure_dir(a.out_dir);
  write_sweep_csv(dir / "results.csv", r);
  write_summary_csv(dir / "summary.csv", r);
  write_plot_csv(dir / "plot.csv", r);
  std::size_t failed = 0;
  for (const auto& row : r.rows) failed += row.ok ? 0 : 1;
  std::cout << "wrote " << r.rows.size() << " cells (" << failed << " failed) to " << dir.string() << '\n';
}

void add_run_options(CLI::App* cmd, RunArgs& a) {
  cmd->add_option("--config", a.config, "run configuration JSON");
  cmd->add_option("--estimator", a.estimator, "cs-head | cw-ext | cw-head | sc");
  cmd->add_option("--detector", a.detector, "spp | oracle");
  cmd->add_option("--tau-y", a.tau_y, "noisy covariance time constant, s");
  cmd->add_option("--tau-n", a.tau_n, "noise covariance time constant, s");
  cmd->add_option("--eval-start-fraction", a.eval_start_fraction, "fraction of frames skipped before scoring");
  cmd->add_option("--tolerance", a.tolerance, "accuracy tolerance, degrees");
  cmd->add_flag("--literal-noise-recursion", a.literal,
                "use the unweighted recursions with the noise matrix recursing from the noisy one");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direction-of-arrival estimation from relative transfer functions with an external microphone"};
  app.require_subcommand(1);

  PrototypeArgs proto;
  auto* p = app.add_subcommand("prototypes", "build a free-field prototype database");
  p->add_option("--geometry", proto.geometry, "geometry JSON (default: 4-mic binaural preset)");
  p->add_option("--step", proto.step, "grid step, degrees")->check(CLI::PositiveNumber);
  p->add_option("--sample-rate", proto.sample_rate)->check(CLI::PositiveNumber);
  p->add_option("--fft-size", proto.fft_size);
  p->add_flag("--head-shadow", proto.head_shadow, "apply the rigid-sphere level term");
  p->add_option("-o,--out", proto.out, "output file");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "render a scene description to WAV files and ground truth");
  s->add_option("scene", sim.scene, "scene JSON")->required();
  s->add_option("-o,--out-dir", sim.out_dir);
  s->add_option("--snr", sim.snr_db, "override snr_db");
  s->add_flag("--pcm16", sim.pcm16, "write 16-bit PCM instead of float32");

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "per-frame DOA from a multichannel WAV");
  e->add_option("--mixed", est.mixed, "noisy multichannel WAV (head mics first, external last)")->required();
  e->add_option("--db", est.db, "prototype database (default: generated binaural preset)");
  e->add_option("--labels", est.labels, "activity bitmap for the oracle detector");
  e->add_option("--truth", est.truth, "truth CSV; enables metrics.json");
  e->add_option("--scenario", est.run.scenario, "static | moving (selects defaults)");
  e->add_option("-o,--out-dir", est.out_dir);
  e->add_flag("--cost-surface", est.cost_surface, "also write cost_surface.csv");
  add_run_options(e, est.run);

  EvaluateArgs ev;
  ev.run.scenario = "auto";
  auto* v = app.add_subcommand("evaluate", "score a DOA CSV against a truth CSV");
  v->add_option("--doa", ev.doa)->required();
  v->add_option("--truth", ev.truth)->required();
  v->add_option("--scenario", ev.run.scenario, "auto | static | moving");
  v->add_option("-o,--out", ev.out, "metrics JSON (default: stdout)");
  add_run_options(v, ev.run);

  SweepArgs sw;
  auto* w = app.add_subcommand("sweep", "run a condition matrix");
  w->add_option("matrix", sw.matrix, "sweep matrix JSON")->required();
  w->add_option("-o,--out-dir", sw.out_dir);
  w->add_option("--threads", sw.threads);
  w->add_flag("-q,--quiet", sw.quiet);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kExitConfig;
  }

  try {
    if (*p) cmd_prototypes(proto);
    if (*s) cmd_simulate(sim);
    if (*e) return cmd_estimate(est);
    if (*v) cmd_evaluate(ev);
    if (*w) cmd_sweep(sw);
  } catch (const ConfigError& ex) {
    std::cerr << "configuration error: " << ex.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& ex) {
    std::cerr << "numerical failure: " << ex.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
