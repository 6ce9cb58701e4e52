#pragma once

#include "rtfdoa/common.hpp"
#include "rtfdoa/linalg.hpp"

namespace rtfdoa {

enum class RtfVariant { Head, Extended };

/// Relative transfer function vector normalised to the reference (first) microphone.
struct RtfVector {
  CVector values;
  RtfVariant variant = RtfVariant::Head;
  bool valid = false;

  /// Head-mounted part: the first M entries of an extended vector, or the vector itself.
  CVector head(Eigen::Index head_mics) const { return values.head(head_mics); }
};

struct EstimatorConfig {
  int column = 1;  // 1-based column of the difference matrix used by covariance subtraction
  double diag_load_rel = 1e-10;
  double eig_tol = 1e-8;
  int eig_max_iter = 100;
  double denom_floor = 1e-12;

  void validate(Eigen::Index dimension) const;
};

/// Covariance subtraction on head-mounted matrices: column j of (phi_y_h - phi_n_h),
/// normalised by its first entry.
RtfVector estimate_cs_head(const CMatrix& phi_y_h, const CMatrix& phi_n_h, const EstimatorConfig& cfg);

/// Covariance whitening: de-whitened principal eigenvector of L^-1 phi_y L^-H with
/// phi_n = L L^H. The variant tag follows the caller (Extended for all channels, Head for the
/// head-mounted submatrices). `warm_start`, when given, seeds the eigenvector search and is
/// overwritten with the whitened eigenvector on success.
RtfVector estimate_cw(const CMatrix& phi_y, const CMatrix& phi_n, const EstimatorConfig& cfg,
                      RtfVariant variant, CVector* warm_start = nullptr);

/// Spatial coherence: head part of the last column of phi_y, normalised by its first entry.
RtfVector estimate_sc(const CMatrix& phi_y, const EstimatorConfig& cfg);

}  // namespace rtfdoa
