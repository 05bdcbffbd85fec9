#include "rfmdet/classical_detectors.hpp"

#include <cmath>
#include <string>

namespace rfmdet {

double mf_statistic(std::span<const ComplexScalar> y,
                    std::span<const ComplexScalar> p,
                    const HermitianMatrix& sigma) {
  return mf_statistic(y, p, cholesky(sigma));
}

double mf_statistic(std::span<const ComplexScalar> y,
                    std::span<const ComplexScalar> p,
                    const LowerTriangular& sigma_chol) {
  if (y.size() != p.size() || static_cast<int>(y.size()) != sigma_chol.dim()) {
    throw std::invalid_argument("mf_statistic: dimension mismatch");
  }
  // With wp = L^{-1} p and wy = L^{-1} y: p^H Sigma^{-1} y = wp^H wy.
  const ComplexVector wp = sigma_chol.solve_forward(p);
  const ComplexVector wy = sigma_chol.solve_forward(y);
  const double num = std::norm(vdot(wp, wy));
  const double den = norm_sq(wp);
  return num / den;
}

double nmf_statistic(std::span<const ComplexScalar> y,
                     std::span<const ComplexScalar> p,
                     const HermitianMatrix& sigma) {
  return nmf_statistic(y, p, cholesky(sigma));
}

double nmf_statistic(std::span<const ComplexScalar> y,
                     std::span<const ComplexScalar> p,
                     const LowerTriangular& sigma_chol) {
  if (y.size() != p.size() || static_cast<int>(y.size()) != sigma_chol.dim()) {
    throw std::invalid_argument("nmf_statistic: dimension mismatch");
  }
  if (norm_sq(y) == 0.0) throw ZeroObservation("nmf_statistic: zero observation");
  const ComplexVector wp = sigma_chol.solve_forward(p);
  const ComplexVector wy = sigma_chol.solve_forward(y);
  const double num = std::norm(vdot(wp, wy));
  return num / (norm_sq(wp) * norm_sq(wy));
}

CovEstimate scm(std::span<const ComplexVector> z) {
  if (z.empty()) throw EmptySecondaryData("scm: no secondary data");
  const int n = static_cast<int>(z.front().size());
  HermitianMatrix m(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      ComplexScalar acc = 0.0;
      for (const auto& zk : z) acc += zk[i] * std::conj(zk[j]);
      m.set(i, j, acc / static_cast<double>(z.size()));
    }
  }
  return {std::move(m), CovEstimator::kScm, 0, true};
}

CovEstimate tyler_fp(std::span<const ComplexVector> z, const TylerOptions& opts) {
  if (z.empty()) throw EmptySecondaryData("tyler_fp: no secondary data");
  const int n = static_cast<int>(z.front().size());
  const int k = static_cast<int>(z.size());
  if (k < n) {
    throw InsufficientSecondaryData("tyler_fp: K=" + std::to_string(k) +
                                    " < N=" + std::to_string(n));
  }
  for (const auto& zk : z) {
    if (norm_sq(zk) == 0.0) throw DegenerateSample("tyler_fp: zero sample");
  }

  HermitianMatrix sigma = HermitianMatrix::identity(n);
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    const LowerTriangular chol = cholesky(sigma);
    HermitianMatrix next(n);
    for (const auto& zk : z) {
      const ComplexVector w = chol.solve_forward(zk);  // z^H Sigma^{-1} z = ||w||^2
      const double q = norm_sq(w);
      const double scale = static_cast<double>(n) / (static_cast<double>(k) * q);
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
          next.set(i, j, next(i, j) + scale * zk[i] * std::conj(zk[j]));
        }
      }
    }
    // Pin the scale-free fixed point: trace normalized to N.
    const double tr = next.trace_real();
    const double norm_scale = static_cast<double>(n) / tr;
    HermitianMatrix normalized(n);
    double diff_sq = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        const ComplexScalar v = norm_scale * next(i, j);
        normalized.set(i, j, v);
        const double d2 = std::norm(v - sigma(i, j));
        diff_sq += (i == j) ? d2 : 2.0 * d2;
      }
    }
    const double rel_change = std::sqrt(diff_sq) / sigma.frobenius_norm();
    sigma = std::move(normalized);
    if (rel_change < opts.tol) {
      return {std::move(sigma), CovEstimator::kTylerFp, iter, true};
    }
  }
  throw NotConverged("tyler_fp: no convergence in " + std::to_string(opts.max_iter) +
                     " iterations");
}

double amf_scm(std::span<const ComplexScalar> y, std::span<const ComplexScalar> p,
               std::span<const ComplexVector> secondary) {
  return mf_statistic(y, p, scm(secondary).matrix);
}

double anmf_scm(std::span<const ComplexScalar> y, std::span<const ComplexScalar> p,
                std::span<const ComplexVector> secondary) {
  return nmf_statistic(y, p, scm(secondary).matrix);
}

double anmf_fp(std::span<const ComplexScalar> y, std::span<const ComplexScalar> p,
               std::span<const ComplexVector> secondary) {
  return nmf_statistic(y, p, tyler_fp(secondary).matrix);
}

double mf_threshold_analytic(double pfa) {
  if (!(pfa > 0.0 && pfa < 1.0)) {
    throw std::domain_error("mf_threshold_analytic: pfa must lie in (0, 1)");
  }
  return -std::log(pfa);
}

double nmf_threshold_analytic(double pfa, int n) {
  if (!(pfa > 0.0 && pfa < 1.0)) {
    throw std::domain_error("nmf_threshold_analytic: pfa must lie in (0, 1)");
  }
  if (n < 2) throw std::domain_error("nmf_threshold_analytic: n must be >= 2");
  return 1.0 - std::pow(pfa, 1.0 / (n - 1));
}

double marcum_q1(double a, double b) {
  if (a < 0.0 || b < 0.0) throw std::domain_error("marcum_q1: arguments must be >= 0");
  if (b == 0.0) return 1.0;
  // Poisson mixture of Erlang tails: Q1(a,b) = sum_k Pois(k; a^2/2) P(Erlang(k+1) > b^2/2).
  const double lambda = 0.5 * a * a;
  const double x = 0.5 * b * b;
  if (lambda > 650.0) return 1.0;  // e^{-lambda} underflows; tail is 1 to double precision
  double pois = std::exp(-lambda);   // Pois(0)
  double term = std::exp(-x);        // e^{-x} x^0 / 0!
  double tail = term;                // P(Erlang(1) > x)
  double q = pois * tail;
  double pois_mass = pois;
  for (int k = 1; k < 100000; ++k) {
    pois *= lambda / k;
    term *= x / k;
    tail += term;
    q += pois * tail;
    pois_mass += pois;
    if (1.0 - pois_mass < 1e-16 && k > lambda) break;
  }
  return q < 1.0 ? q : 1.0;
}

double mf_pd_analytic(double snr_linear, double pfa) {
  if (snr_linear < 0.0) throw std::domain_error("mf_pd_analytic: snr must be >= 0");
  const double lambda = mf_threshold_analytic(pfa);
  return marcum_q1(std::sqrt(2.0 * snr_linear), std::sqrt(2.0 * lambda));
}

}  // namespace rfmdet
