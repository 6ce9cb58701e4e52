#include "rtfdoa/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace rtfdoa {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::CsHead: return "cs-head";
    case Estimator::CwExt: return "cw-ext";
    case Estimator::CwHead: return "cw-head";
    case Estimator::Sc: return "sc";
  }
  return "sc";
}

std::string to_string(Detector d) { return d == Detector::Spp ? "spp" : "oracle"; }

Estimator parse_estimator(const std::string& name) {
  for (Estimator e : kAllEstimators) {
    if (to_string(e) == name) return e;
  }
  throw ConfigError("unknown estimator '" + name + "' (expected cs-head, cw-ext, cw-head or sc)");
}

Detector parse_detector(const std::string& name) {
  if (name == "spp") return Detector::Spp;
  if (name == "oracle") return Detector::Oracle;
  throw ConfigError("unknown detector '" + name + "' (expected spp or oracle)");
}

RunConfig RunConfig::static_defaults() { return RunConfig{}; }

RunConfig RunConfig::moving_defaults() {
  RunConfig cfg;
  cfg.tau_y = 0.15;
  cfg.eval_start_fraction = 0.0;
  return cfg;
}

void RunConfig::validate() const {
  if (!(tau_y > 0.0) || !(tau_n > 0.0)) throw ConfigError("time constants must be positive");
  if (!(tolerance_deg > 0.0)) throw ConfigError("tolerance must be positive");
  if (!(eval_start_fraction >= 0.0 && eval_start_fraction < 1.0)) throw ConfigError("eval_start_fraction must be in [0, 1)");
  if (!std::isfinite(oracle_margin_db)) throw ConfigError("oracle margin must be finite");
  spp.validate();
}

nlohmann::json run_config_to_json(const RunConfig& c) {
  return {{"estimator", to_string(c.estimator)},
          {"detector", to_string(c.detector)},
          {"tau_y_s", c.tau_y},
          {"tau_n_s", c.tau_n},
          {"eval_start_fraction", c.eval_start_fraction},
          {"tolerance_deg", c.tolerance_deg},
          {"literal_noise_recursion", c.literal_noise_recursion},
          {"oracle_margin_db", c.oracle_margin_db},
          {"spp",
           {{"prior_speech_prob", c.spp.prior_speech_prob},
            {"fixed_apriori_snr_db", c.spp.fixed_apriori_snr_db},
            {"threshold", c.spp.threshold},
            {"noise_psd_floor", c.spp.noise_psd_floor},
            {"noise_smoothing", c.spp.noise_smoothing},
            {"init_frames", c.spp.init_frames},
            {"stagnation_guard", c.spp.stagnation_guard}}},
          {"rtf",
           {{"column", c.rtf.column},
            {"diag_load_rel", c.rtf.diag_load_rel},
            {"eig_tol", c.rtf.eig_tol},
            {"eig_max_iter", c.rtf.eig_max_iter},
            {"denom_floor", c.rtf.denom_floor}}}};
}

RunConfig run_config_from_json(const nlohmann::json& j, RunConfig c) {
  try {
    if (j.contains("estimator")) c.estimator = parse_estimator(j.at("estimator").get<std::string>());
    if (j.contains("detector")) c.detector = parse_detector(j.at("detector").get<std::string>());
    c.tau_y = j.value("tau_y_s", c.tau_y);
    c.tau_n = j.value("tau_n_s", c.tau_n);
    c.eval_start_fraction = j.value("eval_start_fraction", c.eval_start_fraction);
    c.tolerance_deg = j.value("tolerance_deg", c.tolerance_deg);
    c.literal_noise_recursion = j.value("literal_noise_recursion", c.literal_noise_recursion);
    c.oracle_margin_db = j.value("oracle_margin_db", c.oracle_margin_db);
    if (j.contains("spp")) {
      const auto& s = j.at("spp");
      c.spp.prior_speech_prob = s.value("prior_speech_prob", c.spp.prior_speech_prob);
      c.spp.fixed_apriori_snr_db = s.value("fixed_apriori_snr_db", c.spp.fixed_apriori_snr_db);
      c.spp.threshold = s.value("threshold", c.spp.threshold);
      c.spp.noise_psd_floor = s.value("noise_psd_floor", c.spp.noise_psd_floor);
      c.spp.noise_smoothing = s.value("noise_smoothing", c.spp.noise_smoothing);
      c.spp.init_frames = s.value("init_frames", c.spp.init_frames);
      c.spp.stagnation_guard = s.value("stagnation_guard", c.spp.stagnation_guard);
    }
    if (j.contains("rtf")) {
      const auto& r = j.at("rtf");
      c.rtf.column = r.value("column", c.rtf.column);
      c.rtf.diag_load_rel = r.value("diag_load_rel", c.rtf.diag_load_rel);
      c.rtf.eig_tol = r.value("eig_tol", c.rtf.eig_tol);
      c.rtf.eig_max_iter = r.value("eig_max_iter", c.rtf.eig_max_iter);
      c.rtf.denom_floor = r.value("denom_floor", c.rtf.denom_floor);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad run configuration: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

struct EstimatorLane {
  Estimator kind;
  std::vector<double> costs;  // [frame x direction]
  std::vector<std::size_t> bins_used;
  CVector held;  // last valid head-mounted RTF of the current bin
  bool has_held = false;
  CVector warm;  // eigenvector warm start for the current bin
  std::vector<double> angles;  // angles of `held` against every direction
  bool evaluated = false;      // estimator has run at least once in the current bin
  std::size_t noise_reads = 0;
};

}  // namespace

std::vector<Localization> localize(const TFGrid& noisy, const LabelGrid& labels, const PrototypeDatabase& db,
                                   std::span<const Estimator> estimators, const LocalizeOptions& opt) {
  const std::size_t head = db.mics;
  const std::size_t channels = noisy.channels();
  const std::size_t bins = noisy.bins();
  const std::size_t frames = noisy.frames();
  const std::size_t dirs = db.directions.size();
  if (channels != head && channels != head + 1) {
    throw ConfigError("input has " + std::to_string(channels) + " channels; the database expects " +
                      std::to_string(head) + " head-mounted microphones plus at most one external");
  }
  if (bins != db.bins) throw ConfigError("STFT bin count does not match the prototype database");
  if (labels.bins() != bins || labels.frames() != frames) throw ConfigError("activity labels do not match the STFT grid");
  const bool has_external = channels == head + 1;
  for (Estimator e : estimators) {
    if (needs_external(e) && !has_external) {
      throw ConfigError("estimator " + to_string(e) + " needs the external microphone channel");
    }
  }
  opt.smoothing.validate();
  opt.rtf.validate(static_cast<Eigen::Index>(channels));

  const PrototypeMatcher matcher(db);
  std::vector<EstimatorLane> lanes;
  for (Estimator e : estimators) {
    EstimatorLane lane;
    lane.kind = e;
    lane.costs.assign(frames * dirs, 0.0);
    lane.bins_used.assign(frames, 0);
    lane.angles.assign(dirs, 0.0);
    lanes.push_back(std::move(lane));
  }

  const auto p = static_cast<Eigen::Index>(channels);
  const auto m = static_cast<Eigen::Index>(head);
  CVector y(p);
  // DC carries no phase information and is excluded from matching.
  for (std::size_t k = 1; k < bins; ++k) {
    CovarianceState state(static_cast<int>(channels));
    for (auto& lane : lanes) {
      lane.has_held = false;
      lane.evaluated = false;
      lane.warm.resize(0);
    }
    std::vector<std::span<const Complex>> series(channels);
    for (std::size_t c = 0; c < channels; ++c) series[c] = noisy.series(c, k);

    for (std::size_t l = 0; l < frames; ++l) {
      for (Eigen::Index c = 0; c < p; ++c) y(c) = series[static_cast<std::size_t>(c)][l];
      const ActivityLabel label = labels.at(k, l);
      const bool updated = state.update(y, label, opt.smoothing, opt.form);
      if (l < opt.first_estimated_frame) continue;
      const bool y_changed = updated && label == ActivityLabel::SpeechPlusNoise;

      // The initial noise matrix is a white prior, so only the noisy matrix must have been seen.
      const bool ready = state.frames_seen_y() > 0;
      for (auto& lane : lanes) {
        // Estimates are pure functions of the matrices; skip when their inputs are unchanged.
        const bool inputs_changed = lane.kind == Estimator::Sc ? y_changed : updated;
        if (lane.evaluated && !inputs_changed) {
          if (lane.has_held) {
            double* row = lane.costs.data() + l * dirs;
            for (std::size_t i = 0; i < dirs; ++i) row[i] += lane.angles[i];
            ++lane.bins_used[l];
          }
          continue;
        }
        lane.evaluated = true;
        RtfVector est;
        const std::size_t reads_before = state.noise_reads();
        switch (lane.kind) {
          case Estimator::CsHead:
            if (ready) {
              est = has_external ? estimate_cs_head(head_submatrix(state.noisy()), head_submatrix(state.noise()), opt.rtf)
                                 : estimate_cs_head(state.noisy(), state.noise(), opt.rtf);
            }
            break;
          case Estimator::CwExt:
            if (ready) {
              est = estimate_cw(state.noisy(), state.noise(), opt.rtf, RtfVariant::Extended, &lane.warm);
            }
            break;
          case Estimator::CwHead:
            if (ready) {
              est = has_external ? estimate_cw(head_submatrix(state.noisy()), head_submatrix(state.noise()), opt.rtf,
                                               RtfVariant::Head, &lane.warm)
                                 : estimate_cw(state.noisy(), state.noise(), opt.rtf, RtfVariant::Head, &lane.warm);
            }
            break;
          case Estimator::Sc:
            if (ready) est = estimate_sc(state.noisy(), opt.rtf);
            break;
        }
        lane.noise_reads += state.noise_reads() - reads_before;
        if (est.valid) {
          CVector g = est.head(m);
          if (matcher.angles(k, g, lane.angles)) {
            lane.held = std::move(g);
            lane.has_held = true;
          }
        }
        if (lane.has_held) {
          double* row = lane.costs.data() + l * dirs;
          for (std::size_t i = 0; i < dirs; ++i) row[i] += lane.angles[i];
          ++lane.bins_used[l];
        }
      }
    }
  }

  std::vector<Localization> out;
  for (auto& lane : lanes) {
    Localization loc;
    loc.estimator = lane.kind;
    loc.noise_cov_reads = lane.noise_reads;
    loc.bins_used = lane.bins_used;
    loc.frames.resize(frames);
    CostRow row;
    for (std::size_t l = 0; l < frames; ++l) {
      const std::size_t used = lane.bins_used[l];
      row.values.assign(lane.costs.begin() + static_cast<std::ptrdiff_t>(l * dirs),
                        lane.costs.begin() + static_cast<std::ptrdiff_t>((l + 1) * dirs));
      row.bins_used = used;
      row.valid = used > 0;
      if (row.valid) {
        for (double& v : row.values) v /= static_cast<double>(used);
        std::copy(row.values.begin(), row.values.end(), lane.costs.begin() + static_cast<std::ptrdiff_t>(l * dirs));
      }
      DoaEstimate est = argmin_direction(row, db.directions);
      if (l < opt.warmup_frames || l < opt.first_estimated_frame) est.valid = false;
      loc.frames[l] = est;
    }
    if (opt.keep_surface) loc.surface = CostSurface{frames, dirs, std::move(lane.costs)};
    out.push_back(std::move(loc));
  }
  return out;
}

double angular_error(double est_deg, double truth_deg) {
  double d = std::fmod(std::abs(est_deg - truth_deg), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

double accuracy(std::span<const DoaEstimate> estimates, std::span<const double> truth_deg, double tolerance_deg) {
  if (estimates.empty()) throw ConfigError("accuracy over an empty window");
  if (estimates.size() != truth_deg.size()) throw ConfigError("estimate and truth series differ in length");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    if (estimates[i].valid && angular_error(estimates[i].azimuth_deg, truth_deg[i]) <= tolerance_deg) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(estimates.size());
}

std::size_t eval_start_frame(std::size_t frames, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(frames)));
}

Metrics score(std::span<const DoaEstimate> estimates, std::span<const double> truth_deg, double tolerance_deg,
              std::size_t start) {
  if (estimates.size() != truth_deg.size()) throw ConfigError("estimate and truth series differ in length");
  if (start >= estimates.size()) throw ConfigError("evaluation window is empty");
  Metrics m;
  m.tolerance_deg = tolerance_deg;
  m.eval_start_frame = start;
  const auto est = estimates.subspan(start);
  const auto truth = truth_deg.subspan(start);
  m.accuracy_pct = accuracy(est, truth, tolerance_deg);
  m.frames_scored = est.size();
  double sq = 0.0;
  std::size_t valid = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (!est[i].valid) {
      ++m.invalid_frames;
      m.errors_deg.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    const double e = angular_error(est[i].azimuth_deg, truth[i]);
    m.errors_deg.push_back(e);
    sq += e * e;
    ++valid;
  }
  m.rms_error_deg = valid > 0 ? std::sqrt(sq / static_cast<double>(valid)) : std::numeric_limits<double>::quiet_NaN();
  return m;
}

nlohmann::json metrics_to_json(const Metrics& m) {
  const auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json errors = nlohmann::json::array();
  for (double e : m.errors_deg) errors.push_back(num(e));
  nlohmann::json j{{"accuracy_pct", m.accuracy_pct},
                   {"tolerance_deg", m.tolerance_deg},
                   {"eval_start_frame", m.eval_start_frame},
                   {"frames_scored", m.frames_scored},
                   {"invalid_frames", m.invalid_frames},
                   {"rms_error_deg", num(m.rms_error_deg)},
                   {"errors_deg", errors}};
  if (m.noise_cov_reads) j["noise_cov_reads"] = *m.noise_cov_reads;
  return j;
}

LabelGrid detect(const RunConfig& cfg, const TFGrid& noisy, std::size_t head_mics, const LabelGrid* oracle) {
  if (cfg.detector == Detector::Oracle) {
    if (!oracle) throw ConfigError("the oracle detector needs reference activity labels");
    if (oracle->bins() != noisy.bins() || oracle->frames() != noisy.frames()) {
      throw ConfigError("oracle labels do not match the STFT grid");
    }
    return *oracle;
  }
  return spp_labels(noisy, head_mics, cfg.spp);
}

RunResult run(const RunConfig& cfg, const RunInputs& in, const PrototypeDatabase& db, bool keep_surface) {
  cfg.validate();
  if (!in.mixed) throw ConfigError("run needs a mixed signal");
  const AudioClip& mixed = *in.mixed;
  mixed.validate();
  if (mixed.sample_rate != db.sample_rate) throw ConfigError("signal and prototype sample rates differ");
  const StftConfig stft = StftConfig::with_frame(db.fft_size, db.fft_size / 2);
  if (needs_external(cfg.estimator) && mixed.channels() <= db.mics) {
    throw ConfigError("estimator " + to_string(cfg.estimator) + " needs the external microphone channel");
  }

  const auto t0 = std::chrono::steady_clock::now();
  const TFGrid tf = analyze(mixed, stft);
  const LabelGrid labels = detect(cfg, tf, db.mics, in.oracle_labels);

  LocalizeOptions opt;
  opt.smoothing = SmoothingConfig::from_time_constants(cfg.tau_y, cfg.tau_n, stft.hop, mixed.sample_rate);
  opt.form = cfg.literal_noise_recursion ? RecursionForm::Literal : RecursionForm::Convex;
  opt.rtf = cfg.rtf;
  opt.warmup_frames = warmup_frames(cfg.tau_y, cfg.tau_n, stft.hop, mixed.sample_rate);
  opt.keep_surface = keep_surface;
  const Estimator which[] = {cfg.estimator};
  auto locs = localize(tf, labels, db, which, opt);
  const auto t1 = std::chrono::steady_clock::now();

  if (tf.frames() > opt.warmup_frames &&
      std::none_of(locs.front().frames.begin(), locs.front().frames.end(), [](const DoaEstimate& e) { return e.valid; })) {
    throw NumericalError("no frame after warm-up produced a valid DOA estimate");
  }

  RunResult r;
  r.localization = std::move(locs.front());
  r.warmup_frames = opt.warmup_frames;
  for (std::size_t l = 0; l < tf.frames(); ++l) r.frame_times.push_back(frame_time(l, stft, mixed.sample_rate));
  r.timing.processing_s = std::chrono::duration<double>(t1 - t0).count();
  r.timing.signal_s = static_cast<double>(mixed.length()) / mixed.sample_rate;
  if (in.truth_deg) {
    if (in.truth_deg->size() != tf.frames()) throw ConfigError("truth has a different frame count than the signal");
    r.metrics = score(r.localization.frames, *in.truth_deg, cfg.tolerance_deg,
                      eval_start_frame(tf.frames(), cfg.eval_start_fraction));
    r.metrics->noise_cov_reads = r.localization.noise_cov_reads;
  }
  return r;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw ConfigError("cannot write " + path.string());
  return os;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    cells.push_back(cell);
  }
  return cells;
}

double parse_number(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
    throw ConfigError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
  }
  return v;
}

// Rows of a CSV whose header must equal `expected`.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || split_csv(line) != expected) throw ConfigError(path.string() + ": unexpected CSV header");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv(line);
    if (cells.size() != expected.size()) {
      throw ConfigError(path.string() + ":" + std::to_string(rows.size() + 2) + ": wrong column count");
    }
    rows.push_back(std::move(cells));
  }
  return rows;
}

}  // namespace

void write_doa_csv(const std::filesystem::path& path, std::span<const DoaEstimate> frames, std::span<const double> times) {
  if (frames.size() != times.size()) throw ConfigError("DOA and time series differ in length");
  auto os = open_out(path);
  os << "frame,time_s,azimuth_deg,cost,valid\n";
  for (std::size_t l = 0; l < frames.size(); ++l) {
    os << l << ',' << fmt("%.6f", times[l]) << ',' << fmt("%.6g", frames[l].azimuth_deg) << ','
       << fmt("%.9g", frames[l].cost) << ',' << (frames[l].valid ? 1 : 0) << '\n';
  }
}

std::vector<DoaEstimate> read_doa_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path, {"frame", "time_s", "azimuth_deg", "cost", "valid"});
  std::vector<DoaEstimate> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (parse_number(r[0], path, i + 2) != static_cast<double>(i)) {
      throw ConfigError(path.string() + ": frames must be consecutive from 0");
    }
    DoaEstimate e;
    e.azimuth_deg = parse_number(r[2], path, i + 2);
    e.cost = parse_number(r[3], path, i + 2);
    e.valid = r[4] == "1" && std::isfinite(e.azimuth_deg);
    out.push_back(e);
  }
  return out;
}

void write_truth_csv(const std::filesystem::path& path, std::span<const double> truth, std::span<const double> times) {
  if (truth.size() != times.size()) throw ConfigError("truth and time series differ in length");
  auto os = open_out(path);
  os << "frame_index,time_s,azimuth_deg\n";
  for (std::size_t l = 0; l < truth.size(); ++l) {
    os << l << ',' << fmt("%.6f", times[l]) << ',' << fmt("%.9g", truth[l]) << '\n';
  }
}

std::vector<double> read_truth_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path, {"frame_index", "time_s", "azimuth_deg"});
  std::vector<double> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (parse_number(rows[i][0], path, i + 2) != static_cast<double>(i)) {
      throw ConfigError(path.string() + ": frames must be consecutive from 0");
    }
    const double az = parse_number(rows[i][2], path, i + 2);
    if (!std::isfinite(az)) throw ConfigError(path.string() + ": truth azimuth must be finite");
    out.push_back(az);
  }
  return out;
}

void write_cost_surface_csv(const std::filesystem::path& path, const CostSurface& s, std::span<const double> directions) {
  if (directions.size() != s.directions) throw ConfigError("cost surface and direction grid differ");
  auto os = open_out(path);
  os << "frame";
  for (double d : directions) os << ',' << fmt("%g", d);
  os << '\n';
  for (std::size_t l = 0; l < s.frames; ++l) {
    os << l;
    for (std::size_t i = 0; i < s.directions; ++i) os << ',' << fmt("%.9g", s.at(l, i));
    os << '\n';
  }
}

}  // namespace rtfdoa
