#include "rfmdet/scenario.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rfmdet {

ClutterKind ClutterKind::compound_gaussian(double mu) {
  if (!(mu > 0.0)) throw std::domain_error("compound clutter requires mu > 0");
  return {true, mu};
}

double ScenarioConfig::noise_power() const {
  // Tr(Sigma_c) = N for the unit-diagonal Toeplitz model.
  return 1.0 / cnr;
}

std::string ScenarioConfig::scenario_label() const {
  return clutter.compound ? "cCGN+AWGN" : "cGN+AWGN";
}

std::uint64_t ScenarioConfig::digest() const {
  struct {
    std::int64_t n;
    double rho;
    std::int64_t compound;
    double mu;
    double cnr;
    std::int64_t mode;
    std::uint64_t seed;
  } key{n_pulses, rho, clutter.compound ? 1 : 0, clutter.texture_shape,
        cnr, snr_mode == SnrMode::kWhitened ? 0 : 1, seed};
  return fnv1a64(&key, sizeof(key));
}

ComplexVector steering_vector(double doppler_bin, int n) {
  if (n < 1) throw std::invalid_argument("steering_vector: n must be positive");
  ComplexVector p(n);
  for (int k = 0; k < n; ++k) {
    const double angle = 2.0 * std::numbers::pi * doppler_bin * k / n;
    p[k] = {std::cos(angle), std::sin(angle)};
  }
  return p;
}

ComplexVector sample_complex_gaussian(const HermitianMatrix& cov, RandomStream& rng) {
  return sample_complex_gaussian(cholesky(cov), rng);
}

ComplexVector sample_complex_gaussian(const LowerTriangular& cov_chol, RandomStream& rng) {
  const int n = cov_chol.dim();
  ComplexVector u(n);
  for (int i = 0; i < n; ++i) u[i] = rng.circular_normal();
  return cov_chol.apply(u);
}

double sample_texture(double mu, RandomStream& rng) {
  if (!(mu > 0.0)) throw std::domain_error("sample_texture: mu must be positive");
  return rng.gamma(mu) / mu;
}

ScenarioCovariance clutter_covariance(const ScenarioConfig& cfg) {
  HermitianMatrix sc = toeplitz_covariance(cfg.rho, cfg.n_pulses);
  const double sigma2 = cfg.noise_power();
  HermitianMatrix total = add(sc, scaled_identity(sigma2, cfg.n_pulses));
  return {std::move(sc), std::move(total), sigma2};
}

ComplexScalar calibrate_alpha(double snr_db, double doppler_bin, double phase,
                              const ScenarioConfig& cfg) {
  const ScenarioSampler sampler(cfg);
  const double mag = sampler.alpha_magnitude(snr_db, doppler_bin);
  const double angle = 2.0 * std::numbers::pi * phase;
  return mag * ComplexScalar{std::cos(angle), std::sin(angle)};
}

std::vector<double> embed_real(const ComplexVector& y) {
  std::vector<double> x(2 * y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    x[i] = y[i].real();
    x[y.size() + i] = y[i].imag();
  }
  return x;
}

ComplexVector unembed_real(std::span<const double> x) {
  if (x.size() % 2 != 0) {
    throw std::invalid_argument("unembed_real: input length must be even");
  }
  const std::size_t n = x.size() / 2;
  ComplexVector y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = {x[i], x[n + i]};
  return y;
}

ScenarioSampler::ScenarioSampler(const ScenarioConfig& cfg)
    : cfg_(cfg),
      cov_(clutter_covariance(cfg)),
      clutter_chol_(cholesky(cov_.clutter)),
      total_chol_(cholesky(cov_.total)),
      noise_sigma_(std::sqrt(cov_.noise_power)) {
  if (cfg.n_pulses < 2) throw std::invalid_argument("scenario requires N >= 2");
}

double ScenarioSampler::alpha_magnitude(double snr_db, double doppler_bin) const {
  const double snr = std::pow(10.0, snr_db / 10.0);
  if (cfg_.snr_mode == SnrMode::kLiteralPaper) {
    return std::sqrt(snr / cfg_.n_pulses);
  }
  const ComplexVector p = steering_vector(doppler_bin, cfg_.n_pulses);
  const ComplexVector sp = total_chol_.solve(p);
  const double php = vdot(p, sp).real();
  return std::sqrt(snr / php);
}

ComplexVector ScenarioSampler::sample_h0(RandomStream& rng) const {
  const int n = cfg_.n_pulses;
  double scale = 1.0;
  if (cfg_.clutter.compound) {
    scale = std::sqrt(sample_texture(cfg_.clutter.texture_shape, rng));
  }
  ComplexVector y = sample_complex_gaussian(clutter_chol_, rng);
  for (auto& v : y) v *= scale;
  for (int i = 0; i < n; ++i) y[i] += noise_sigma_ * rng.circular_normal();
  return y;
}

Observation ScenarioSampler::sample(Hypothesis hyp, double snr_db, double doppler_bin,
                                    RandomStream& rng) const {
  Observation obs;
  obs.hypothesis = hyp;
  obs.y = sample_h0(rng);
  if (hyp == Hypothesis::kH1) {
    const double phi = rng.uniform();
    const double mag = alpha_magnitude(snr_db, doppler_bin);
    const double angle = 2.0 * std::numbers::pi * phi;
    const ComplexScalar alpha = mag * ComplexScalar{std::cos(angle), std::sin(angle)};
    const ComplexVector p = steering_vector(doppler_bin, cfg_.n_pulses);
    for (int i = 0; i < cfg_.n_pulses; ++i) obs.y[i] += alpha * p[i];
    obs.snr_db = snr_db;
    obs.doppler_bin = doppler_bin;
    obs.phase = phi;
  }
  return obs;
}

SecondaryData ScenarioSampler::sample_secondary(std::size_t k, RandomStream& rng) const {
  if (k == 0) k = static_cast<std::size_t>(2 * cfg_.n_pulses);
  SecondaryData sd;
  sd.config = cfg_;
  sd.z.reserve(k);
  for (std::size_t i = 0; i < k; ++i) sd.z.push_back(sample_h0(rng));
  return sd;
}

Observation sample_observation(Hypothesis hyp, double snr_db, double doppler_bin,
                               const ScenarioConfig& cfg, RandomStream& rng) {
  return ScenarioSampler(cfg).sample(hyp, snr_db, doppler_bin, rng);
}

DataSplits generate_splits(const ScenarioConfig& cfg, const SplitCounts& counts) {
  if (counts.train == 0 || counts.validation == 0 || counts.test == 0) {
    throw std::invalid_argument("generate_splits: counts must be positive");
  }
  const ScenarioSampler sampler(cfg);
  const std::size_t d = static_cast<std::size_t>(cfg.data_dim());

  auto fill = [&](Split split, StreamPurpose purpose, std::size_t rows) {
    Dataset ds;
    ds.rows = rows;
    ds.cols = d;
    ds.split = split;
    ds.config = cfg;
    ds.creation_seed = cfg.seed;
    ds.x.resize(rows * d);
    for (std::size_t i = 0; i < rows; ++i) {
      RandomStream rng = RandomStream::derive(cfg.seed, purpose, i);
      const ComplexVector y = sampler.sample_h0(rng);
      double* row = ds.row(i);
      for (int j = 0; j < cfg.n_pulses; ++j) {
        row[j] = y[j].real();
        row[cfg.n_pulses + j] = y[j].imag();
      }
    }
    return ds;
  };

  DataSplits splits;
  splits.train = fill(Split::kTrain, StreamPurpose::kDatasetTrain, counts.train);
  splits.validation = fill(Split::kValidation, StreamPurpose::kDatasetValidation, counts.validation);
  splits.test = fill(Split::kTest, StreamPurpose::kDatasetTest, counts.test);
  return splits;
}

SecondaryData sample_secondary(const ScenarioConfig& cfg, std::size_t k,
                               RandomStream& rng) {
  return ScenarioSampler(cfg).sample_secondary(k, rng);
}

}  // namespace rfmdet
