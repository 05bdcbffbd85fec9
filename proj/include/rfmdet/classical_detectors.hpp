#pragma once

#include <span>
#include <stdexcept>

#include "rfmdet/complex_linalg.hpp"

namespace rfmdet {

class ZeroObservation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class EmptySecondaryData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class InsufficientSecondaryData : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class DegenerateSample : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};
class NotConverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CovEstimator { kKnown, kScm, kTylerFp };

struct CovEstimate {
  HermitianMatrix matrix;
  CovEstimator estimator = CovEstimator::kKnown;
  int iterations = 0;
  bool converged = true;
};

/// |p^H Sigma^{-1} y|^2 / (p^H Sigma^{-1} p).
double mf_statistic(std::span<const ComplexScalar> y,
                    std::span<const ComplexScalar> p,
                    const HermitianMatrix& sigma);
double mf_statistic(std::span<const ComplexScalar> y,
                    std::span<const ComplexScalar> p,
                    const LowerTriangular& sigma_chol);

/// |p^H Sigma^{-1} y|^2 / ((p^H Sigma^{-1} p)(y^H Sigma^{-1} y)); in [0, 1],
/// invariant to rescaling of y.
double nmf_statistic(std::span<const ComplexScalar> y,
                     std::span<const ComplexScalar> p,
                     const HermitianMatrix& sigma);
double nmf_statistic(std::span<const ComplexScalar> y,
                     std::span<const ComplexScalar> p,
                     const LowerTriangular& sigma_chol);

/// Sample covariance (1/K) sum z_k z_k^H.
CovEstimate scm(std::span<const ComplexVector> z);

struct TylerOptions {
  double tol = 1e-6;  // relative Frobenius change
  int max_iter = 100;
};

/// Tyler fixed point, iterated from identity, trace-normalized to N after
/// every iteration. Requires K >= N and nonzero samples.
CovEstimate tyler_fp(std::span<const ComplexVector> z, const TylerOptions& opts = {});

double amf_scm(std::span<const ComplexScalar> y, std::span<const ComplexScalar> p,
               std::span<const ComplexVector> secondary);
double anmf_scm(std::span<const ComplexScalar> y, std::span<const ComplexScalar> p,
                std::span<const ComplexVector> secondary);
double anmf_fp(std::span<const ComplexScalar> y, std::span<const ComplexScalar> p,
               std::span<const ComplexVector> secondary);

/// Exp(1) tail: lambda = -ln(pfa).
double mf_threshold_analytic(double pfa);

/// Beta(1, n-1) tail: lambda = 1 - pfa^{1/(n-1)}.
double nmf_threshold_analytic(double pfa, int n);

/// Marcum Q_1(sqrt(2 snr), sqrt(-2 ln pfa)): known-covariance MF detection
/// probability under the whitened SNR convention.
double mf_pd_analytic(double snr_linear, double pfa);

double marcum_q1(double a, double b);

}  // namespace rfmdet
