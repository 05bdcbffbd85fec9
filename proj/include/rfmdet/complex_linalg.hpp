#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

namespace rfmdet {

using ComplexScalar = std::complex<double>;
using ComplexVector = std::vector<ComplexScalar>;

/// Thrown when a Cholesky pivot falls at or below the PD threshold (1e-14).
class NonPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LowerTriangular;

/// Dense Hermitian matrix, full row-major storage. Construction symmetrizes
/// exactly after validating Hermitian symmetry to 1e-12 absolute.
class HermitianMatrix {
 public:
  explicit HermitianMatrix(int n);
  static HermitianMatrix identity(int n);
  static HermitianMatrix from_entries(int n, std::vector<ComplexScalar> row_major);

  int dim() const { return n_; }
  const ComplexScalar& operator()(int i, int j) const { return a_[i * n_ + j]; }

  /// Writes entry (i, j) and its conjugate at (j, i); diagonal writes keep
  /// only the real part.
  void set(int i, int j, ComplexScalar v);

  ComplexVector multiply(std::span<const ComplexScalar> x) const;
  double trace_real() const;
  double frobenius_norm() const;
  std::span<const ComplexScalar> data() const { return a_; }

 private:
  int n_;
  std::vector<ComplexScalar> a_;
};

/// Cholesky factor: strictly zero above the diagonal, real positive diagonal.
class LowerTriangular {
 public:
  explicit LowerTriangular(int n);

  int dim() const { return n_; }
  const ComplexScalar& operator()(int i, int j) const { return a_[i * n_ + j]; }
  ComplexScalar& at(int i, int j) { return a_[i * n_ + j]; }

  ComplexVector solve_forward(std::span<const ComplexScalar> b) const;  // L x = b
  ComplexVector solve_adjoint(std::span<const ComplexScalar> b) const;  // L^H x = b
  ComplexVector solve(std::span<const ComplexScalar> b) const;          // L L^H x = b
  ComplexVector apply(std::span<const ComplexScalar> x) const;          // L x
  HermitianMatrix reconstruct() const;                                  // L L^H

 private:
  int n_;
  std::vector<ComplexScalar> a_;
};

/// Exponential-correlation Toeplitz covariance: entries rho^{|i-j|}.
HermitianMatrix toeplitz_covariance(double rho, int n);

HermitianMatrix scaled_identity(double s, int n);
HermitianMatrix add(const HermitianMatrix& a, const HermitianMatrix& b);

LowerTriangular cholesky(const HermitianMatrix& m);

/// Solves m x = b through the Cholesky factorization; never forms m^{-1}.
ComplexVector solve_hermitian(const HermitianMatrix& m,
                              std::span<const ComplexScalar> b);

/// a^H m b. Conjugate-linear in a, linear in b.
ComplexScalar sesquilinear(std::span<const ComplexScalar> a,
                           const HermitianMatrix& m,
                           std::span<const ComplexScalar> b);

/// a^H b.
ComplexScalar vdot(std::span<const ComplexScalar> a,
                   std::span<const ComplexScalar> b);

double norm_sq(std::span<const ComplexScalar> a);

}  // namespace rfmdet
