#include "rfmdet/complex_linalg.hpp"

#include <cmath>
#include <string>

namespace rfmdet {

namespace {
constexpr double kPivotThreshold = 1e-14;
constexpr double kHermitianTol = 1e-12;

void check_dim(int n) {
  if (n < 1) throw std::invalid_argument("matrix dimension must be positive");
}
}  // namespace

HermitianMatrix::HermitianMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n) {
  check_dim(n);
}

HermitianMatrix HermitianMatrix::identity(int n) {
  HermitianMatrix m(n);
  for (int i = 0; i < n; ++i) m.a_[i * n + i] = 1.0;
  return m;
}

HermitianMatrix HermitianMatrix::from_entries(int n, std::vector<ComplexScalar> row_major) {
  check_dim(n);
  if (row_major.size() != static_cast<std::size_t>(n) * n) {
    throw std::invalid_argument("entry count does not match dimension");
  }
  HermitianMatrix m(n);
  m.a_ = std::move(row_major);
  for (int i = 0; i < n; ++i) {
    if (std::abs(m.a_[i * n + i].imag()) > kHermitianTol) {
      throw std::invalid_argument("diagonal entries must be real");
    }
    for (int j = 0; j <= i; ++j) {
      const ComplexScalar lo = m.a_[i * n + j];
      const ComplexScalar hi = m.a_[j * n + i];
      if (std::abs(lo - std::conj(hi)) > kHermitianTol) {
        throw std::invalid_argument("matrix is not Hermitian within tolerance");
      }
      // Symmetrize exactly so downstream code can rely on the invariant.
      const ComplexScalar avg = 0.5 * (lo + std::conj(hi));
      m.a_[i * n + j] = (i == j) ? ComplexScalar(avg.real(), 0.0) : avg;
      m.a_[j * n + i] = (i == j) ? ComplexScalar(avg.real(), 0.0) : std::conj(avg);
    }
  }
  return m;
}

void HermitianMatrix::set(int i, int j, ComplexScalar v) {
  if (i == j) {
    a_[i * n_ + j] = ComplexScalar(v.real(), 0.0);
  } else {
    a_[i * n_ + j] = v;
    a_[j * n_ + i] = std::conj(v);
  }
}

ComplexVector HermitianMatrix::multiply(std::span<const ComplexScalar> x) const {
  if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("dimension mismatch");
  ComplexVector y(n_);
  for (int i = 0; i < n_; ++i) {
    ComplexScalar acc = 0.0;
    const ComplexScalar* row = &a_[i * n_];
    for (int j = 0; j < n_; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

double HermitianMatrix::trace_real() const {
  double t = 0.0;
  for (int i = 0; i < n_; ++i) t += a_[i * n_ + i].real();
  return t;
}

double HermitianMatrix::frobenius_norm() const {
  double s = 0.0;
  for (const auto& v : a_) s += std::norm(v);
  return std::sqrt(s);
}

LowerTriangular::LowerTriangular(int n) : n_(n), a_(static_cast<std::size_t>(n) * n) {
  check_dim(n);
}

ComplexVector LowerTriangular::solve_forward(std::span<const ComplexScalar> b) const {
  if (static_cast<int>(b.size()) != n_) throw std::invalid_argument("dimension mismatch");
  ComplexVector x(b.begin(), b.end());
  for (int i = 0; i < n_; ++i) {
    ComplexScalar acc = x[i];
    const ComplexScalar* row = &a_[i * n_];
    for (int j = 0; j < i; ++j) acc -= row[j] * x[j];
    x[i] = acc / row[i];
  }
  return x;
}

ComplexVector LowerTriangular::solve_adjoint(std::span<const ComplexScalar> b) const {
  if (static_cast<int>(b.size()) != n_) throw std::invalid_argument("dimension mismatch");
  ComplexVector x(b.begin(), b.end());
  for (int i = n_ - 1; i >= 0; --i) {
    ComplexScalar acc = x[i];
    for (int j = i + 1; j < n_; ++j) acc -= std::conj(a_[j * n_ + i]) * x[j];
    x[i] = acc / a_[i * n_ + i].real();
  }
  return x;
}

ComplexVector LowerTriangular::solve(std::span<const ComplexScalar> b) const {
  return solve_adjoint(solve_forward(b));
}

ComplexVector LowerTriangular::apply(std::span<const ComplexScalar> x) const {
  if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("dimension mismatch");
  ComplexVector y(n_);
  for (int i = 0; i < n_; ++i) {
    ComplexScalar acc = 0.0;
    const ComplexScalar* row = &a_[i * n_];
    for (int j = 0; j <= i; ++j) acc += row[j] * x[j];
    y[i] = acc;
  }
  return y;
}

HermitianMatrix LowerTriangular::reconstruct() const {
  HermitianMatrix m(n_);
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j <= i; ++j) {
      ComplexScalar acc = 0.0;
      for (int k = 0; k <= j; ++k) acc += a_[i * n_ + k] * std::conj(a_[j * n_ + k]);
      m.set(i, j, acc);
    }
  }
  return m;
}

HermitianMatrix toeplitz_covariance(double rho, int n) {
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::domain_error("toeplitz_covariance: rho must lie in [0, 1)");
  }
  check_dim(n);
  std::vector<double> powers(n);
  powers[0] = 1.0;
  for (int k = 1; k < n; ++k) powers[k] = powers[k - 1] * rho;
  HermitianMatrix m(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) m.set(i, j, powers[i - j]);
  }
  return m;
}

HermitianMatrix scaled_identity(double s, int n) {
  HermitianMatrix m(n);
  for (int i = 0; i < n; ++i) m.set(i, i, s);
  return m;
}

HermitianMatrix add(const HermitianMatrix& a, const HermitianMatrix& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch");
  const int n = a.dim();
  HermitianMatrix m(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) m.set(i, j, a(i, j) + b(i, j));
  }
  return m;
}

LowerTriangular cholesky(const HermitianMatrix& m) {
  const int n = m.dim();
  LowerTriangular l(n);
  for (int j = 0; j < n; ++j) {
    double pivot = m(j, j).real();
    for (int k = 0; k < j; ++k) pivot -= std::norm(l(j, k));
    if (pivot <= kPivotThreshold) {
      throw NonPositiveDefinite("cholesky: pivot " + std::to_string(pivot) +
                                " at column " + std::to_string(j));
    }
    const double d = std::sqrt(pivot);
    l.at(j, j) = d;
    for (int i = j + 1; i < n; ++i) {
      ComplexScalar acc = m(i, j);
      for (int k = 0; k < j; ++k) acc -= l(i, k) * std::conj(l(j, k));
      l.at(i, j) = acc / d;
    }
  }
  return l;
}

ComplexVector solve_hermitian(const HermitianMatrix& m,
                              std::span<const ComplexScalar> b) {
  return cholesky(m).solve(b);
}

ComplexScalar sesquilinear(std::span<const ComplexScalar> a,
                           const HermitianMatrix& m,
                           std::span<const ComplexScalar> b) {
  if (static_cast<int>(a.size()) != m.dim() || static_cast<int>(b.size()) != m.dim()) {
    throw std::invalid_argument("dimension mismatch");
  }
  const ComplexVector mb = m.multiply(b);
  return vdot(a, mb);
}

ComplexScalar vdot(std::span<const ComplexScalar> a,
                   std::span<const ComplexScalar> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  ComplexScalar acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
  return acc;
}

double norm_sq(std::span<const ComplexScalar> a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return s;
}

}  // namespace rfmdet
