#pragma once

// Matrix-type generic kernels behind rtfdoa/linalg.hpp, so hot paths can run on fixed-size
// Eigen matrices.

#include <algorithm>
#include <cmath>
#include <optional>

#include "rtfdoa/linalg.hpp"

namespace rtfdoa::detail {

template <typename Mat>
std::optional<Mat> cholesky_impl(const Mat& h, double diag_load_rel) {
  const Eigen::Index p = h.rows();
  if (p == 0 || h.cols() != p) return std::nullopt;
  double trace = 0.0;
  for (Eigen::Index i = 0; i < p; ++i) trace += h(i, i).real();
  const double load = diag_load_rel * trace / static_cast<double>(p);

  Mat l = Mat::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double d = h(j, j).real() + load;
    for (Eigen::Index k = 0; k < j; ++k) d -= std::norm(l(j, k));
    if (!(d > 0.0) || !std::isfinite(d)) return std::nullopt;
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (Eigen::Index i = j + 1; i < p; ++i) {
      Complex s = h(i, j);
      for (Eigen::Index k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / ljj;
    }
  }
  return l;
}

template <typename Vec>
void fix_phase_impl(Vec& v) {
  Eigen::Index best = 0;
  double best_mag = -1.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::norm(v(i));
    if (mag > best_mag) {
      best_mag = mag;
      best = i;
    }
  }
  if (best_mag <= 0.0) return;
  const Complex phase = std::conj(v(best)) / std::sqrt(best_mag);
  v *= phase;
  v(best) = Complex(v(best).real(), 0.0);
}

// True if no eigenvalue of h exceeds lambda + slack. 2 lambda^2 > ||h||_F^2 settles it
// directly; otherwise (lambda + slack) I - h must admit a Cholesky factor.
template <typename Mat>
bool certified_largest(const Mat& h, double lambda, double slack, double fro) {
  if (lambda > 0.0 && 2.0 * lambda * lambda > fro * fro * (1.0 + 1e-9)) return true;
  Mat shifted = -h;
  shifted.diagonal().array() += lambda + slack;
  return cholesky_impl(shifted, 0.0).has_value();
}

// Solves a x = b by Gaussian elimination with partial pivoting (pivot by squared modulus).
// Returns false for an exactly singular pivot.
template <typename Mat, typename Vec>
bool solve_in_place(Mat a, Vec& b) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::Index piv = c;
    double best = std::norm(a(c, c));
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const double v = std::norm(a(r, c));
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best == 0.0) return false;
    if (piv != c) {
      a.row(c).swap(a.row(piv));
      std::swap(b(c), b(piv));
    }
    const Complex inv = 1.0 / a(c, c);
    for (Eigen::Index r = c + 1; r < n; ++r) {
      const Complex f = a(r, c) * inv;
      for (Eigen::Index j = c + 1; j < n; ++j) a(r, j) -= f * a(c, j);
      b(r) -= f * b(c);
    }
  }
  for (Eigen::Index r = n - 1; r >= 0; --r) {
    Complex s = b(r);
    for (Eigen::Index j = r + 1; j < n; ++j) s -= a(r, j) * b(j);
    b(r) = s / a(r, r);
  }
  return true;
}

template <typename Vec>
struct EigenPairT {
  Vec vector;
  double value = 0.0;
};

template <typename Mat, typename Vec = Eigen::Matrix<Complex, Mat::RowsAtCompileTime, 1, 0, Mat::MaxRowsAtCompileTime, 1>>
std::optional<EigenPairT<Vec>> principal_impl(const Mat& h, double tol, int max_iter, const Vec* start) {
  const Eigen::Index n = h.rows();
  if (n == 0 || h.cols() != n) return std::nullopt;
  const double fro = h.norm();
  if (!std::isfinite(fro)) return std::nullopt;
  if (fro == 0.0) {
    EigenPairT<Vec> zero{Vec::Zero(n), 0.0};
    zero.vector(0) = 1.0;
    return zero;
  }

  if (start && start->size() == n && start->norm() > 0.0) {
    Vec v = *start / start->norm();
    const int fast_iters = std::min(max_iter, 8);
    for (int it = 0; it < fast_iters; ++it) {
      const Vec w = h * v;
      const double lambda = v.dot(w).real();  // Eigen's dot conjugates the first argument
      const double residual = (w - lambda * v).norm();
      if (residual <= tol * fro && certified_largest(h, lambda, residual + tol * fro, fro)) {
        fix_phase_impl(v);
        return EigenPairT<Vec>{v, lambda};
      }
      // Rayleigh quotient step; a power step if the shifted system is unusable.
      Mat shifted = h;
      shifted.diagonal().array() -= lambda;
      Vec x = v;
      const double xn = solve_in_place(shifted, x) ? x.norm() : 0.0;
      if (std::isfinite(xn) && xn > 0.0) {
        v = x / xn;
        continue;
      }
      const double wn = w.norm();
      if (!(wn > 0.0)) break;
      v = w / wn;
    }
  }

  const HermitianEigen eig = jacobi_eigen(CMatrix(h), max_iter);
  Vec v = eig.vectors.col(0);
  const double lambda = eig.values(0);
  if ((h * v - lambda * v).norm() > tol * fro) return std::nullopt;
  fix_phase_impl(v);
  return EigenPairT<Vec>{v, lambda};
}

}  // namespace rtfdoa::detail
