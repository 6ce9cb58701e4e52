#include "rtfdoa/doa.hpp"

#include <algorithm>
#include <cmath>

namespace rtfdoa {

double hermitian_angle(std::span<const Complex> a, std::span<const Complex> b) {
  if (a.size() != b.size() || a.empty()) throw ConfigError("Hermitian angle needs vectors of equal, nonzero length");
  Complex inner(0.0, 0.0);
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inner += std::conj(a[i]) * b[i];
    na += std::norm(a[i]);
    nb += std::norm(b[i]);
  }
  if (!(na > 0.0) || !(nb > 0.0)) throw ConfigError("Hermitian angle of a zero vector is undefined");
  // |a|^2 |b|^2 - |a^H b|^2 via the Lagrange identity, so near-collinear pairs keep full
  // relative accuracy instead of going through arccos near 1.
  double cross = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) cross += std::norm(a[i] * b[j] - a[j] * b[i]);
  return std::atan2(std::sqrt(cross), std::abs(inner));
}

double hermitian_angle(const CVector& a, const CVector& b) {
  return hermitian_angle(std::span<const Complex>(a.data(), static_cast<std::size_t>(a.size())),
                         std::span<const Complex>(b.data(), static_cast<std::size_t>(b.size())));
}

CostRow cost_row(std::span<const RtfVector> estimates, const PrototypeDatabase& db) {
  if (estimates.size() != db.bins) throw ConfigError("cost row needs one estimate per frequency bin");
  CostRow row;
  row.values.assign(db.directions.size(), 0.0);
  const auto m = static_cast<Eigen::Index>(db.mics);
  for (std::size_t k = 1; k < db.bins; ++k) {
    const RtfVector& est = estimates[k];
    if (!est.valid || est.values.size() < m) continue;
    const CVector g = est.head(m);
    if (g.squaredNorm() == 0.0 || !g.allFinite()) continue;
    for (std::size_t i = 0; i < db.directions.size(); ++i) {
      row.values[i] += hermitian_angle(db.at(i, k), std::span<const Complex>(g.data(), db.mics));
    }
    ++row.bins_used;
  }
  if (row.bins_used == 0) return row;
  for (double& v : row.values) v /= static_cast<double>(row.bins_used);
  row.valid = true;
  return row;
}

DoaEstimate argmin_direction(const CostRow& row, std::span<const double> directions) {
  DoaEstimate est;
  if (!row.valid || row.values.empty() || row.values.size() != directions.size()) return est;
  std::size_t best = 0;
  for (std::size_t i = 1; i < row.values.size(); ++i) {
    const double c = row.values[i], cb = row.values[best];
    if (c < cb) {
      best = i;
    } else if (c == cb) {
      const double ai = std::abs(directions[i]), ab = std::abs(directions[best]);
      if (ai < ab || (ai == ab && directions[i] < directions[best])) best = i;
    }
  }
  est.azimuth_deg = directions[best];
  est.cost = row.values[best];
  est.valid = true;
  return est;
}

namespace {

// asin on |x| <= 0.5: x + x^3 P(x^2) / Q(x^2), good to about one ulp.
inline double asin_small(double x) {
  const double z = x * x;
  const double p =
      ((((4.253011369004428248960e-3 * z - 6.019598008014123785661e-1) * z + 5.444622390564711410273e0) * z -
        1.626247967210700244449e1) * z + 1.956261983317594739197e1) * z - 8.198089802484824371615e0;
  const double q = ((((z - 1.474091372988853791896e1) * z + 7.049610280856842141659e1) * z - 1.471791292232726029859e2) * z +
                    1.395105614657485689735e2) * z - 4.918853881490881290097e1;
  return x + x * z * p / q;
}

// Branch-free arccos on [0, 1] so the direction loop vectorises.
inline double acos_unit(double x) {
  const bool upper = x > 0.5;
  const double half = std::sqrt(0.5 * (1.0 - x));
  const double a = asin_small(upper ? half : x);
  return upper ? 2.0 * a : 0.5 * kPi - a;
}

}  // namespace

PrototypeMatcher::PrototypeMatcher(const PrototypeDatabase& db)
    : directions_(db.directions.size()), bins_(db.bins), mics_(db.mics), planes_(bins_ * mics_ * 2 * directions_) {
  for (std::size_t k = 0; k < bins_; ++k) {
    for (std::size_t i = 0; i < directions_; ++i) {
      const auto src = db.at(i, k);
      double norm = 0.0;
      for (const Complex& c : src) norm += std::norm(c);
      norm = std::sqrt(norm);
      for (std::size_t m = 0; m < mics_; ++m) {
        planes_[plane(k, m, 0) + i] = src[m].real() / norm;
        planes_[plane(k, m, 1) + i] = src[m].imag() / norm;
      }
    }
  }
}

bool PrototypeMatcher::angles(std::size_t k, const CVector& g, std::span<double> out) const {
  const double gn2 = g.squaredNorm();
  if (!(gn2 > 0.0) || !std::isfinite(gn2) || static_cast<std::size_t>(g.size()) != mics_ || out.size() != directions_) {
    return false;
  }
  const double inv = 1.0 / std::sqrt(gn2);
  std::fill(out.begin(), out.end(), 0.0);
  // Real and imaginary parts of conj(p) * g, summed over microphones; reuse `out` for one of them.
  thread_local std::vector<double> imag;
  imag.assign(directions_, 0.0);
  double* re = out.data();
  double* im = imag.data();
  for (std::size_t m = 0; m < mics_; ++m) {
    const double xr = g(static_cast<Eigen::Index>(m)).real(), xi = g(static_cast<Eigen::Index>(m)).imag();
    const double* pr = planes_.data() + plane(k, m, 0);
    const double* pi = planes_.data() + plane(k, m, 1);
    for (std::size_t i = 0; i < directions_; ++i) {
      re[i] += pr[i] * xr + pi[i] * xi;
      im[i] += pr[i] * xi - pi[i] * xr;
    }
  }
  for (std::size_t i = 0; i < directions_; ++i) {
    const double ratio = std::sqrt(re[i] * re[i] + im[i] * im[i]) * inv;
    re[i] = acos_unit(ratio < 1.0 ? ratio : 1.0);
  }
  return true;
}

bool PrototypeMatcher::accumulate(std::size_t k, const CVector& g, std::span<double> row) const {
  thread_local std::vector<double> tmp;
  tmp.resize(directions_);
  if (row.size() != directions_ || !angles(k, g, tmp)) return false;
  for (std::size_t i = 0; i < directions_; ++i) row[i] += tmp[i];
  return true;
}

}  // namespace rtfdoa
