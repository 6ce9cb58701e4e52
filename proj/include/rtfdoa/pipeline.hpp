#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "rtfdoa/activity.hpp"
#include "rtfdoa/covariance.hpp"
#include "rtfdoa/doa.hpp"
#include "rtfdoa/prototypes.hpp"
#include "rtfdoa/rtf.hpp"
#include "rtfdoa/stft.hpp"

namespace rtfdoa {

enum class Estimator { CsHead, CwExt, CwHead, Sc };
enum class Detector { Spp, Oracle };

std::string to_string(Estimator e);
std::string to_string(Detector d);
Estimator parse_estimator(const std::string& name);  // "cs-head", "cw-ext", "cw-head", "sc"
Detector parse_detector(const std::string& name);    // "spp", "oracle"
inline bool needs_external(Estimator e) { return e == Estimator::CwExt || e == Estimator::Sc; }
inline constexpr Estimator kAllEstimators[] = {Estimator::CsHead, Estimator::CwExt, Estimator::CwHead, Estimator::Sc};

struct RunConfig {
  Estimator estimator = Estimator::Sc;
  Detector detector = Detector::Spp;
  double tau_y = 0.25;  // seconds
  double tau_n = 0.5;
  double eval_start_fraction = 0.5;  // frames before this fraction of the signal are not scored
  double tolerance_deg = 5.0;
  bool literal_noise_recursion = false;
  double oracle_margin_db = -10.0;
  SppConfig spp;
  EstimatorConfig rtf;

  static RunConfig static_defaults();
  /// tau_y = 150 ms and every frame scored.
  static RunConfig moving_defaults();
  void validate() const;
};

nlohmann::json run_config_to_json(const RunConfig& cfg);
/// Fields present in `j` override `base`.
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

struct LocalizeOptions {
  SmoothingConfig smoothing;
  RecursionForm form = RecursionForm::Convex;
  EstimatorConfig rtf;
  std::size_t warmup_frames = 0;
  // Covariances are tracked from frame 0, but RTF and cost evaluation start here.
  std::size_t first_estimated_frame = 0;
  bool keep_surface = false;
};

struct Localization {
  Estimator estimator = Estimator::Sc;
  std::vector<DoaEstimate> frames;    // DOA per frame; invalid during warm-up or without valid bins
  std::vector<std::size_t> bins_used;  // per frame
  std::optional<CostSurface> surface;
  std::size_t noise_cov_reads = 0;
};

/// Single causal pass over the noisy STFT: per bin, covariance tracking gated by `labels`,
/// RTF estimation for each requested estimator (last valid estimate per bin held), and
/// accumulation of Hermitian-angle costs against the database. The first db.mics channels
/// are head-mounted; a further channel, if present, is the external microphone.
std::vector<Localization> localize(const TFGrid& noisy, const LabelGrid& labels, const PrototypeDatabase& db,
                                   std::span<const Estimator> estimators, const LocalizeOptions& options);

/// |est - truth| wrapped into [0, 180].
double angular_error(double est_deg, double truth_deg);

/// Percentage of frames within tolerance; invalid estimates count as misses.
/// Throws ConfigError on an empty window or mismatched lengths.
double accuracy(std::span<const DoaEstimate> estimates, std::span<const double> truth_deg, double tolerance_deg);

struct Metrics {
  double accuracy_pct = 0.0;
  double tolerance_deg = 5.0;
  std::size_t eval_start_frame = 0;
  std::size_t frames_scored = 0;
  std::size_t invalid_frames = 0;
  double rms_error_deg = 0.0;  // over valid scored frames; NaN if none
  std::vector<double> errors_deg;  // per scored frame; NaN for invalid frames
  std::optional<std::size_t> noise_cov_reads;
};

std::size_t eval_start_frame(std::size_t frames, double eval_start_fraction);
Metrics score(std::span<const DoaEstimate> estimates, std::span<const double> truth_deg, double tolerance_deg,
              std::size_t start_frame);
nlohmann::json metrics_to_json(const Metrics& m);

struct RunTiming {
  double processing_s = 0.0;
  double signal_s = 0.0;
  double real_time_factor() const { return signal_s > 0.0 ? processing_s / signal_s : 0.0; }
};

struct RunResult {
  Localization localization;
  std::vector<double> frame_times;
  std::optional<Metrics> metrics;  // only when truth was given
  RunTiming timing;
  std::size_t warmup_frames = 0;
};

struct RunInputs {
  const AudioClip* mixed = nullptr;
  const std::vector<double>* truth_deg = nullptr;  // per frame
  const LabelGrid* oracle_labels = nullptr;         // required for the oracle detector
};

/// STFT, detection, localisation and (with truth) scoring for one estimator.
RunResult run(const RunConfig& cfg, const RunInputs& inputs, const PrototypeDatabase& db, bool keep_surface = false);

/// Activity labels for a noisy grid with the configured detector.
LabelGrid detect(const RunConfig& cfg, const TFGrid& noisy, std::size_t head_mics, const LabelGrid* oracle);

/// frame,time_s,azimuth_deg,cost,valid
void write_doa_csv(const std::filesystem::path& path, std::span<const DoaEstimate> frames, std::span<const double> times);
std::vector<DoaEstimate> read_doa_csv(const std::filesystem::path& path);

/// frame_index,time_s,azimuth_deg
void write_truth_csv(const std::filesystem::path& path, std::span<const double> truth_deg, std::span<const double> times);
std::vector<double> read_truth_csv(const std::filesystem::path& path);

/// Frame-major rows, one column per direction.
void write_cost_surface_csv(const std::filesystem::path& path, const CostSurface& surface, std::span<const double> directions);

}  // namespace rtfdoa
