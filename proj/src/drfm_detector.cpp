#include "rfmdet/drfm_detector.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace rfmdet {

std::vector<double> inverse_map(const MlpParams& params, std::span<const double> x,
                                const IntegrationConfig& cfg) {
  if (static_cast<int>(x.size()) != params.arch.data_dim) {
    throw std::invalid_argument("inverse_map: dimension mismatch");
  }
  return inverse_map_batch(params, x.data(), 1, cfg);
}

std::vector<double> inverse_map_batch(const MlpParams& params, const double* x,
                                      std::size_t m, const IntegrationConfig& cfg) {
  if (cfg.steps < 1) throw std::invalid_argument("inverse_map: steps must be >= 1");
  const int d = params.arch.data_dim;
  std::vector<double> u(x, x + m * d);
  std::vector<double> v(m * d);
  std::vector<double> t(m);
  const double h = 1.0 / static_cast<double>(cfg.steps);
  for (int k = cfg.steps; k >= 1; --k) {
    const double tk = static_cast<double>(k) / cfg.steps;
    std::fill(t.begin(), t.end(), tk);
    forward_batch(params, u.data(), t.data(), m, v.data());
    for (std::size_t i = 0; i < u.size(); ++i) u[i] -= h * v[i];
  }
  return u;
}

double anomaly_score(std::span<const double> z) {
  double s = 0.0;
  for (double v : z) s += v * v;
  return s;
}

std::vector<double> anomaly_scores(const MlpParams& params, const double* x,
                                   std::size_t m, const IntegrationConfig& cfg) {
  const int d = params.arch.data_dim;
  const std::vector<double> z = inverse_map_batch(params, x, m, cfg);
  std::vector<double> scores(m);
  for (std::size_t i = 0; i < m; ++i) {
    scores[i] = anomaly_score(std::span<const double>(z.data() + i * d, d));
  }
  return scores;
}

Threshold calibrate_threshold(std::span<const double> scores, double pfa) {
  if (scores.empty()) throw std::invalid_argument("calibrate_threshold: no scores");
  if (!(pfa > 0.0 && pfa < 1.0)) {
    throw std::domain_error("calibrate_threshold: pfa must lie in (0, 1)");
  }
  const std::size_t m = scores.size();
  const auto k = static_cast<std::size_t>(
      std::ceil((1.0 - pfa) * static_cast<double>(m)));
  std::vector<double> sorted(scores.begin(), scores.end());
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
  Threshold thr;
  thr.lambda = sorted[k - 1];
  thr.pfa_target = pfa;
  thr.calibration_size = m;
  thr.source = ThresholdSource::kEmpiricalQuantile;
  return thr;
}

Hypothesis detect(std::span<const double> x, const MlpParams& params,
                  const Threshold& threshold, const IntegrationConfig& cfg) {
  const std::vector<double> z = inverse_map(params, x, cfg);
  return anomaly_score(z) > threshold.lambda ? Hypothesis::kH1 : Hypothesis::kH0;
}

}  // namespace rfmdet
