#include "rtfdoa/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "linalg_impl.hpp"

namespace rtfdoa {

std::optional<CMatrix> cholesky(const CMatrix& h, double diag_load_rel) {
  return detail::cholesky_impl(h, diag_load_rel);
}

void fix_phase(CVector& v) { detail::fix_phase_impl(v); }

HermitianEigen jacobi_eigen(const CMatrix& h, int max_sweeps) {
  const Eigen::Index n = h.rows();
  CMatrix a = h;
  for (Eigen::Index i = 0; i < n; ++i) a(i, i) = Complex(a(i, i).real(), 0.0);
  CMatrix v = CMatrix::Identity(n, n);
  const double fro2 = a.squaredNorm();

  HermitianEigen out;
  for (int sweep = 0; sweep <= max_sweeps; ++sweep) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (off <= 1e-32 * fro2 || off == 0.0) {
      out.converged = true;
      break;
    }
    if (sweep == max_sweeps) break;

    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const Complex apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag == 0.0) continue;
        const Complex e = apq / mag;  // a_pq = |a_pq| e
        const Complex ec = std::conj(e);
        const double theta = (a(q, q).real() - a(p, p).real()) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        // A <- U^H A U with U = [[c, s], [-s conj(e), c conj(e)]] on the (p, q) plane.
        for (Eigen::Index r = 0; r < n; ++r) {
          const Complex arp = a(r, p), arq = a(r, q);
          a(r, p) = c * arp - s * ec * arq;
          a(r, q) = s * arp + c * ec * arq;
        }
        for (Eigen::Index r = 0; r < n; ++r) {
          const Complex apr = a(p, r), aqr = a(q, r);
          a(p, r) = c * apr - s * e * aqr;
          a(q, r) = s * apr + c * e * aqr;
        }
        a(p, q) = a(q, p) = Complex(0.0, 0.0);
        a(p, p) = Complex(a(p, p).real(), 0.0);
        a(q, q) = Complex(a(q, q).real(), 0.0);
        for (Eigen::Index r = 0; r < n; ++r) {
          const Complex vrp = v(r, p), vrq = v(r, q);
          v(r, p) = c * vrp - s * ec * vrq;
          v(r, q) = s * vrp + c * ec * vrq;
        }
      }
    }
  }

  std::array<Eigen::Index, kMaxChannels> order{};
  std::iota(order.begin(), order.begin() + n, Eigen::Index{0});
  std::stable_sort(order.begin(), order.begin() + n,
                   [&](Eigen::Index x, Eigen::Index y) { return a(x, x).real() > a(y, y).real(); });
  out.values.resize(n);
  out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    out.values(i) = a(order[i], order[i]).real();
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

std::optional<EigenPair> principal_eigenvector(const CMatrix& h, double tol, int max_iter, const CVector* start) {
  auto r = detail::principal_impl(h, tol, max_iter, start);
  if (!r) return std::nullopt;
  return EigenPair{std::move(r->vector), r->value};
}

}  // namespace rtfdoa
