#pragma once

#include <cstddef>
#include <span>

#include "json.hpp"

#include "rtfdoa/activity.hpp"
#include "rtfdoa/common.hpp"

namespace rtfdoa {

struct SmoothingConfig {
  double alpha_y = 0.0;
  double alpha_n = 0.0;

  /// alpha = exp(-hop / (fs * tau)) for each time constant (seconds).
  static SmoothingConfig from_time_constants(double tau_y, double tau_n, std::size_t hop, double sample_rate);
  void validate() const;
};

/// How the recursive covariance updates are formed.
enum class RecursionForm {
  /// phi <- alpha phi + (1 - alpha) y y^H on the matrix selected by the label.
  Convex,
  /// The recursions exactly as commonly printed: no (1 - alpha) weight, and the noise matrix
  /// recursing from the previous *noisy* matrix. Only for comparison runs.
  Literal,
};

/// Frames to flag as unreliable after initialisation: ceil(2 tau_max fs / hop).
std::size_t warmup_frames(double tau_y, double tau_n, std::size_t hop, double sample_rate);

/// Recursive noisy/noise covariance estimate for one frequency bin.
class CovarianceState {
 public:
  static constexpr double kInitialLoad = 1e-6;

  explicit CovarianceState(int channels, double initial_load = kInitialLoad);

  int channels() const { return static_cast<int>(phi_y_.rows()); }

  /// Rank-one update of the matrix selected by `label`; the other matrix is untouched.
  /// Returns false and leaves the state unchanged if y has the wrong size or non-finite entries.
  bool update(const CVector& y, ActivityLabel label, const SmoothingConfig& smoothing,
              RecursionForm form = RecursionForm::Convex);

  const CMatrix& noisy() const { return phi_y_; }
  /// Counted accessor: every call increments noise_reads().
  const CMatrix& noise() const {
    ++noise_reads_;
    return phi_n_;
  }

  std::size_t frames_seen_y() const { return frames_seen_y_; }
  std::size_t frames_seen_n() const { return frames_seen_n_; }
  std::size_t noise_reads() const { return noise_reads_; }

  nlohmann::json to_json() const;

 private:
  CMatrix phi_y_;
  CMatrix phi_n_;
  std::size_t frames_seen_y_ = 0;
  std::size_t frames_seen_n_ = 0;
  mutable std::size_t noise_reads_ = 0;
};

/// Leading (P-1) x (P-1) principal submatrix, i.e. E phi E^T with E = [I, 0].
/// Throws ConfigError for inputs smaller than 2x2.
CMatrix head_submatrix(const CMatrix& phi);

/// Diagnostic dump of per-bin states: [{"bin": k, "phi_y": [[[re, im], ...], ...], "phi_n": ...}].
nlohmann::json covariance_dump(std::span<const CovarianceState> states);

}  // namespace rtfdoa
