#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rtfdoa/pipeline.hpp"
#include "rtfdoa/scene.hpp"

namespace rtfdoa {

struct ExternalPlacement {
  double azimuth_deg = 45.0;
  double distance_m = 1.6;
};

/// Condition matrix: every combination of the lists below is one cell per estimator.
struct SweepMatrix {
  std::vector<double> snr_db{-10.0, -5.0, 0.0, 5.0, 10.0};
  std::vector<std::optional<double>> drr_db{std::nullopt};
  std::vector<Estimator> estimators{std::begin(kAllEstimators), std::end(kAllEstimators)};
  std::vector<ExternalPlacement> externals{{}};
  std::vector<double> source_azimuths{-145.0, -35.0, 35.0};
  std::vector<std::uint64_t> seeds{1};
  // Fields other than seed, trajectory, SNR, reverberation and external placement are
  // taken from this template.
  SceneSpec scene;
  RunConfig run = RunConfig::static_defaults();
  double grid_step_deg = 5.0;
  unsigned threads = 1;

  void validate() const;
  std::size_t cell_count() const;
};

SweepMatrix sweep_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

struct SweepRow {
  double snr_db = 0.0;
  std::optional<double> drr_db;
  Estimator estimator = Estimator::Sc;
  ExternalPlacement external;
  double source_azimuth_deg = 0.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  Metrics metrics;
};

/// Accuracy averaged over seeds (per source position), or over seeds and positions
/// (source_azimuth_deg empty).
struct SweepSummaryRow {
  double snr_db = 0.0;
  std::optional<double> drr_db;
  Estimator estimator = Estimator::Sc;
  ExternalPlacement external;
  std::optional<double> source_azimuth_deg;
  std::size_t cells = 0;
  std::size_t failed = 0;
  double mean_accuracy_pct = 0.0;
  double mean_rms_error_deg = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // fixed order: external, drr, azimuth, seed, snr, estimator
  std::vector<SweepSummaryRow> summary;
};

using SweepProgress = std::function<void(std::size_t done, std::size_t total)>;

/// Scenes are rendered once per (external, drr, azimuth, seed) and remixed per SNR; all
/// estimators share one pass. A failing cell is recorded and the sweep continues.
SweepResult run_sweep(const SweepMatrix& matrix, const SweepProgress& progress = {});

SweepResult summarize(std::vector<SweepRow> rows);

void write_sweep_csv(const std::filesystem::path& path, const SweepResult& result);
void write_summary_csv(const std::filesystem::path& path, const SweepResult& result);
/// Long-format x/y series for plotting: series,x_snr_db,y_accuracy_pct (position-averaged).
void write_plot_csv(const std::filesystem::path& path, const SweepResult& result);

}  // namespace rtfdoa
