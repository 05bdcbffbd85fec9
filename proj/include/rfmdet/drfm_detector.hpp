#pragma once

#include <span>
#include <vector>

#include "rfmdet/flow_net.hpp"
#include "rfmdet/scenario.hpp"

namespace rfmdet {

struct IntegrationConfig {
  int steps = 64;  // explicit Euler, t = 1 down to 0
};

enum class ThresholdSource { kEmpiricalQuantile, kAnalytic };

struct Threshold {
  double lambda = 0.0;
  double pfa_target = 0.0;
  std::size_t calibration_size = 0;
  ThresholdSource source = ThresholdSource::kEmpiricalQuantile;
};

/// Reverse-time Euler transport into the latent space:
/// u <- x; for k = S..1: u <- u - (1/S) v(u, k/S).
std::vector<double> inverse_map(const MlpParams& params, std::span<const double> x,
                                const IntegrationConfig& cfg = {});

/// Batch form: x is m x D row-major; all rows share the time grid.
std::vector<double> inverse_map_batch(const MlpParams& params, const double* x,
                                      std::size_t m, const IntegrationConfig& cfg = {});

/// Squared L2 norm of the latent vector.
double anomaly_score(std::span<const double> z);

/// Latent scores for a batch of embedded observations.
std::vector<double> anomaly_scores(const MlpParams& params, const double* x,
                                   std::size_t m, const IntegrationConfig& cfg = {});

/// k-th smallest score with k = ceil((1 - pfa) M); empirical exceedance on
/// the calibration set is within 1/M of pfa on either side.
Threshold calibrate_threshold(std::span<const double> scores, double pfa);

/// H1 iff the anomaly score strictly exceeds lambda; ties decide H0.
Hypothesis detect(std::span<const double> x, const MlpParams& params,
                  const Threshold& threshold, const IntegrationConfig& cfg = {});

}  // namespace rfmdet
