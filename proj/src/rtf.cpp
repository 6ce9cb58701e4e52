#include "rtfdoa/rtf.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "linalg_impl.hpp"

namespace rtfdoa {

void EstimatorConfig::validate(Eigen::Index dimension) const {
  if (column < 1 || column > dimension) {
    throw ConfigError("estimator column " + std::to_string(column) + " outside 1.." + std::to_string(dimension));
  }
  if (!(diag_load_rel >= 0.0) || !(eig_tol > 0.0) || eig_max_iter < 1 || !(denom_floor > 0.0)) {
    throw ConfigError("estimator tolerances must be positive");
  }
}

namespace {

bool finite(const CVector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v(i).real()) || !std::isfinite(v(i).imag())) return false;
  }
  return true;
}

RtfVector normalise(CVector v, RtfVariant variant, double scale_floor) {
  RtfVector out{std::move(v), variant, false};
  const Complex denom = out.values(0);
  if (!(std::abs(denom) >= scale_floor) || std::abs(denom) == 0.0) return out;
  out.values /= denom;
  out.values(0) = Complex(1.0, 0.0);
  out.valid = finite(out.values);
  return out;
}

}  // namespace

RtfVector estimate_cs_head(const CMatrix& phi_y_h, const CMatrix& phi_n_h, const EstimatorConfig& cfg) {
  if (phi_y_h.rows() != phi_n_h.rows() || phi_y_h.rows() < 1) {
    throw ConfigError("covariance subtraction needs matrices of equal size");
  }
  const Eigen::Index j = cfg.column - 1;
  if (j < 0 || j >= phi_y_h.cols()) throw ConfigError("estimator column outside matrix");
  const CVector col = phi_y_h.col(j) - phi_n_h.col(j);
  return normalise(col, RtfVariant::Head, cfg.denom_floor * phi_y_h.norm());
}

namespace {

template <typename Mat>
RtfVector cw_impl(const Mat& phi_y, const Mat& phi_n, const EstimatorConfig& cfg, RtfVariant variant,
                  CVector* warm_start) {
  using Vec = Eigen::Matrix<Complex, Mat::RowsAtCompileTime, 1, 0, Mat::MaxRowsAtCompileTime, 1>;
  const Eigen::Index p = phi_y.rows();
  RtfVector invalid{CVector::Zero(p), variant, false};

  const auto chol = detail::cholesky_impl(phi_n, cfg.diag_load_rel);
  if (!chol) return invalid;
  const Mat& l = *chol;

  // phi_w = L^-1 phi_y L^-H, formed with two triangular solves.
  const auto lower = l.template triangularView<Eigen::Lower>();
  const Mat x = lower.solve(phi_y);
  Mat whitened = lower.solve(x.adjoint()).adjoint();
  whitened = (0.5 * (whitened + whitened.adjoint())).eval();

  std::optional<Vec> start;
  if (warm_start && warm_start->size() == p) start = Vec(*warm_start);
  const auto eig = detail::principal_impl(whitened, cfg.eig_tol, cfg.eig_max_iter, start ? &*start : nullptr);
  if (!eig) return invalid;
  if (warm_start) *warm_start = eig->vector;
  const Vec dewhitened = l * eig->vector;
  return normalise(CVector(dewhitened), variant, cfg.denom_floor * dewhitened.norm());
}

template <int N>
using Fixed = Eigen::Matrix<Complex, N, N>;

}  // namespace

RtfVector estimate_cw(const CMatrix& phi_y, const CMatrix& phi_n, const EstimatorConfig& cfg, RtfVariant variant,
                      CVector* warm_start) {
  const Eigen::Index p = phi_y.rows();
  if (phi_n.rows() != p || p < 1) throw ConfigError("covariance whitening needs matrices of equal size");
  switch (p) {
    case 4: return cw_impl<Fixed<4>>(phi_y, phi_n, cfg, variant, warm_start);
    case 5: return cw_impl<Fixed<5>>(phi_y, phi_n, cfg, variant, warm_start);
    default: return cw_impl<CMatrix>(phi_y, phi_n, cfg, variant, warm_start);
  }
}

RtfVector estimate_sc(const CMatrix& phi_y, const EstimatorConfig& cfg) {
  const Eigen::Index p = phi_y.rows();
  if (p < 2 || phi_y.cols() != p) throw ConfigError("spatial coherence needs a square matrix of size >= 2");
  const CVector head = phi_y.col(p - 1).head(p - 1);
  return normalise(head, RtfVariant::Head, cfg.denom_floor * phi_y.norm());
}

}  // namespace rtfdoa
