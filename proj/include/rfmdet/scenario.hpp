#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfmdet/complex_linalg.hpp"
#include "rfmdet/rng.hpp"

namespace rfmdet {

enum class Hypothesis { kH0, kH1 };
enum class SnrMode { kWhitened, kLiteralPaper };
enum class Split { kTrain, kValidation, kTest, kSecondary };

struct ClutterKind {
  bool compound = false;
  double texture_shape = 1.0;  // Gamma shape mu; texture ~ Gamma(mu, 1/mu)

  static ClutterKind gaussian() { return {false, 1.0}; }
  static ClutterKind compound_gaussian(double mu);
  bool operator==(const ClutterKind&) const = default;
};

struct ScenarioConfig {
  int n_pulses = 16;
  double rho = 0.5;
  ClutterKind clutter{};
  double cnr = 1.0;  // r = Tr(Sigma_c) / (N sigma^2)
  SnrMode snr_mode = SnrMode::kWhitened;
  std::uint64_t seed = 0x5eedULL;

  int data_dim() const { return 2 * n_pulses; }
  /// sigma^2 derived from the clutter-to-noise ratio; unit-diagonal Toeplitz
  /// clutter gives sigma^2 = 1/cnr.
  double noise_power() const;
  std::string scenario_label() const;  // "cGN+AWGN" or "cCGN+AWGN"
  std::uint64_t digest() const;
  bool operator==(const ScenarioConfig&) const = default;
};

struct Observation {
  ComplexVector y;
  Hypothesis hypothesis = Hypothesis::kH0;
  std::optional<double> snr_db;
  std::optional<double> doppler_bin;
  std::optional<double> phase;  // in [0, 1)
};

struct Dataset {
  std::vector<double> x;  // row-major, rows x cols
  std::size_t rows = 0;
  std::size_t cols = 0;
  Split split = Split::kTrain;
  ScenarioConfig config{};
  std::uint64_t creation_seed = 0;

  const double* row(std::size_t i) const { return x.data() + i * cols; }
  double* row(std::size_t i) { return x.data() + i * cols; }
};

struct SecondaryData {
  std::vector<ComplexVector> z;
  ScenarioConfig config{};
};

struct SplitCounts {
  std::size_t train = 10000;
  std::size_t validation = 10000;
  std::size_t test = 5000;
};

struct DataSplits {
  Dataset train;
  Dataset validation;
  Dataset test;
};

struct ScenarioCovariance {
  HermitianMatrix clutter;  // Sigma_c
  HermitianMatrix total;    // Sigma = Sigma_c + sigma^2 I
  double noise_power = 1.0;
};

/// Steering vector p_k = exp(2 pi i d k / n), k = 0..n-1.
ComplexVector steering_vector(double doppler_bin, int n);

ComplexVector sample_complex_gaussian(const HermitianMatrix& cov, RandomStream& rng);
ComplexVector sample_complex_gaussian(const LowerTriangular& cov_chol, RandomStream& rng);

/// Gamma(mu, 1/mu) texture draw; unit mean, strictly positive.
double sample_texture(double mu, RandomStream& rng);

ScenarioCovariance clutter_covariance(const ScenarioConfig& cfg);

/// Target amplitude for the requested SNR. Whitened mode solves
/// |alpha|^2 p^H Sigma^{-1} p = 10^{snr_db/10}; LiteralPaper mode uses
/// |alpha| = sqrt(10^{snr_db/10} / N). Phase factor e^{2 pi i phi} in both.
ComplexScalar calibrate_alpha(double snr_db, double doppler_bin, double phase,
                              const ScenarioConfig& cfg);

std::vector<double> embed_real(const ComplexVector& y);
ComplexVector unembed_real(std::span<const double> x);

/// Prefactored sampler for hot paths; the free-function operations wrap it.
class ScenarioSampler {
 public:
  explicit ScenarioSampler(const ScenarioConfig& cfg);

  const ScenarioConfig& config() const { return cfg_; }
  const ScenarioCovariance& covariance() const { return cov_; }

  /// Target amplitude magnitude at (snr_db, doppler_bin) before the phase factor.
  double alpha_magnitude(double snr_db, double doppler_bin) const;

  ComplexVector sample_h0(RandomStream& rng) const;  // clutter + noise
  Observation sample(Hypothesis hyp, double snr_db, double doppler_bin,
                     RandomStream& rng) const;
  SecondaryData sample_secondary(std::size_t k, RandomStream& rng) const;

 private:
  ScenarioConfig cfg_;
  ScenarioCovariance cov_;
  LowerTriangular clutter_chol_;
  LowerTriangular total_chol_;
  double noise_sigma_;
};

Observation sample_observation(Hypothesis hyp, double snr_db, double doppler_bin,
                               const ScenarioConfig& cfg, RandomStream& rng);

/// H0-only train/validation/test datasets from disjoint per-sample streams.
DataSplits generate_splits(const ScenarioConfig& cfg, const SplitCounts& counts = {});

/// k independent H0 draws; k = 0 selects the default K = 2N.
SecondaryData sample_secondary(const ScenarioConfig& cfg, std::size_t k,
                               RandomStream& rng);

}  // namespace rfmdet
