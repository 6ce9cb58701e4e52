#pragma once

#include <span>
#include <vector>

#include "rtfdoa/common.hpp"
#include "rtfdoa/prototypes.hpp"
#include "rtfdoa/rtf.hpp"

namespace rtfdoa {

/// arccos(|a^H b| / (|a| |b|)) in [0, pi/2]. Throws ConfigError for zero or mismatched vectors.
double hermitian_angle(std::span<const Complex> a, std::span<const Complex> b);
double hermitian_angle(const CVector& a, const CVector& b);

/// Frequency-averaged Hermitian angle for one frame against every database direction.
struct CostRow {
  std::vector<double> values;  // one per direction, radians
  std::size_t bins_used = 0;
  bool valid = false;
};

/// Row-major [frames x directions] cost values.
struct CostSurface {
  std::size_t frames = 0;
  std::size_t directions = 0;
  std::vector<double> values;

  double at(std::size_t l, std::size_t i) const { return values[l * directions + i]; }
};

struct DoaEstimate {
  double azimuth_deg = 0.0;
  double cost = 0.0;
  bool valid = false;
};

/// Mean over valid bins k >= 1 (DC excluded) of the Hermitian angle between the head part of
/// estimates[k] and each prototype. estimates.size() must equal db.bins; invalid bins are left
/// out of both sum and divisor. No valid bins gives an invalid row.
CostRow cost_row(std::span<const RtfVector> estimates, const PrototypeDatabase& db);

/// Direction of minimal cost; ties go to the smallest |azimuth|, then the smaller azimuth.
DoaEstimate argmin_direction(const CostRow& row, std::span<const double> directions);

/// Unit-normalised prototypes laid out per bin for accumulating Hermitian angles. Angles go
/// through arccos of the normalised inner product, so nearly collinear pairs carry an absolute
/// error up to about 1e-8 rad; elsewhere they agree with hermitian_angle to 1e-12.
class PrototypeMatcher {
 public:
  explicit PrototypeMatcher(const PrototypeDatabase& db);

  std::size_t directions() const { return directions_; }
  std::size_t mics() const { return mics_; }

  /// row[i] += d(k, theta_i) for a head-mounted estimate g (size mics()). Returns false and
  /// leaves row untouched if g is zero or non-finite.
  bool accumulate(std::size_t k, const CVector& g, std::span<double> row) const;
  /// out[i] = d(k, theta_i); same failure contract as accumulate.
  bool angles(std::size_t k, const CVector& g, std::span<double> out) const;

 private:
  std::size_t plane(std::size_t k, std::size_t m, std::size_t part) const { return ((k * mics_ + m) * 2 + part) * directions_; }

  std::size_t directions_ = 0, bins_ = 0, mics_ = 0;
  std::vector<double> planes_;  // [K x M x (re, im) x I]
};

}  // namespace rtfdoa
