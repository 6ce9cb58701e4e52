#include "rtfdoa/covariance.hpp"

#include <cmath>

namespace rtfdoa {

SmoothingConfig SmoothingConfig::from_time_constants(double tau_y, double tau_n, std::size_t hop, double sample_rate) {
  if (!(tau_y > 0.0) || !(tau_n > 0.0)) throw ConfigError("smoothing time constants must be positive");
  if (!(sample_rate > 0.0) || hop == 0) throw ConfigError("smoothing needs a positive hop and sample rate");
  const double hop_s = static_cast<double>(hop) / sample_rate;
  return {std::exp(-hop_s / tau_y), std::exp(-hop_s / tau_n)};
}

void SmoothingConfig::validate() const {
  if (!(alpha_y >= 0.0 && alpha_y < 1.0) || !(alpha_n >= 0.0 && alpha_n < 1.0)) {
    throw ConfigError("smoothing factors must lie in [0, 1)");
  }
}

std::size_t warmup_frames(double tau_y, double tau_n, std::size_t hop, double sample_rate) {
  const double tau_max = std::max(tau_y, tau_n);
  return static_cast<std::size_t>(std::ceil(2.0 * tau_max * sample_rate / static_cast<double>(hop) - 1e-9));
}

CovarianceState::CovarianceState(int channels, double initial_load) {
  if (channels < 1 || channels > kMaxChannels) throw ConfigError("unsupported channel count for covariance state");
  phi_y_ = CMatrix::Identity(channels, channels) * initial_load;
  phi_n_ = phi_y_;
}

namespace {

void rank_one_update(CMatrix& target, const CMatrix& previous, double alpha, double weight, const CVector& y) {
  const Eigen::Index p = y.size();
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < p; ++i) {
      target(i, j) = alpha * previous(i, j) + weight * y(i) * std::conj(y(j));
    }
  }
  // Hermitian symmetrisation with an exactly real diagonal.
  for (Eigen::Index j = 0; j < p; ++j) {
    target(j, j) = Complex(target(j, j).real(), 0.0);
    for (Eigen::Index i = j + 1; i < p; ++i) {
      const Complex avg = 0.5 * (target(i, j) + std::conj(target(j, i)));
      target(i, j) = avg;
      target(j, i) = std::conj(avg);
    }
  }
}

}  // namespace

bool CovarianceState::update(const CVector& y, ActivityLabel label, const SmoothingConfig& smoothing,
                             RecursionForm form) {
  if (y.size() != phi_y_.rows()) return false;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (!std::isfinite(y(i).real()) || !std::isfinite(y(i).imag())) return false;
  }
  const bool literal = form == RecursionForm::Literal;
  if (label == ActivityLabel::SpeechPlusNoise) {
    const double a = smoothing.alpha_y;
    rank_one_update(phi_y_, phi_y_, a, literal ? 1.0 : 1.0 - a, y);
    ++frames_seen_y_;
  } else {
    const double a = smoothing.alpha_n;
    if (literal) {
      const CMatrix prev_y = phi_y_;
      rank_one_update(phi_n_, prev_y, a, 1.0, y);
    } else {
      rank_one_update(phi_n_, phi_n_, a, 1.0 - a, y);
    }
    ++frames_seen_n_;
  }
  return true;
}

namespace {
nlohmann::json matrix_json(const CMatrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}
}  // namespace

nlohmann::json CovarianceState::to_json() const {
  return {{"phi_y", matrix_json(phi_y_)},
          {"phi_n", matrix_json(phi_n_)},
          {"frames_seen_y", frames_seen_y_},
          {"frames_seen_n", frames_seen_n_}};
}

CMatrix head_submatrix(const CMatrix& phi) {
  if (phi.rows() < 2 || phi.cols() != phi.rows()) throw ConfigError("head submatrix needs a square matrix of size >= 2");
  const Eigen::Index m = phi.rows() - 1;
  return phi.topLeftCorner(m, m);
}

nlohmann::json covariance_dump(std::span<const CovarianceState> states) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t k = 0; k < states.size(); ++k) {
    nlohmann::json entry = states[k].to_json();
    entry["bin"] = k;
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace rtfdoa
