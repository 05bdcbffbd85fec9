#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "rfmdet/drfm_detector.hpp"

using namespace rfmdet;

namespace {

Dataset gaussian_dataset(int dim, std::size_t rows, std::uint64_t seed) {
  Dataset ds;
  ds.rows = rows;
  ds.cols = dim;
  ds.x.resize(rows * dim);
  RandomStream rng(seed);
  for (auto& v : ds.x) v = rng.normal();
  return ds;
}

}  // namespace

TEST_CASE("inverse map degenerate fields") {
  NetArchitecture arch;
  arch.data_dim = 5;
  arch.hidden_dims = {4};
  SUBCASE("zero velocity returns the input exactly") {
    const MlpParams p = MlpParams::zeros(arch);
    const std::vector<double> x{1.0, -2.0, 0.5, 3.0, -0.25};
    CHECK(inverse_map(p, x) == x);
  }
  SUBCASE("constant field subtracts the constant for any step count") {
    MlpParams p = MlpParams::zeros(arch);
    const std::vector<double> c{0.5, -1.0, 2.0, 0.0, 1.5};
    p.biases[1].assign(c.begin(), c.end());
    const std::vector<double> x{1.0, 1.0, 1.0, 1.0, 1.0};
    for (int steps : {1, 7, 64}) {
      IntegrationConfig cfg;
      cfg.steps = steps;
      const std::vector<double> z = inverse_map(p, x, cfg);
      for (int i = 0; i < 5; ++i) CHECK(z[i] == doctest::Approx(x[i] - c[i]).epsilon(1e-12));
    }
  }
  SUBCASE("batch agrees with per-sample integration") {
    RandomStream rng(51);
    const MlpParams p = init_params(arch, rng);
    std::vector<double> block(4 * 5);
    for (auto& v : block) v = rng.normal();
    const std::vector<double> batch = inverse_map_batch(p, block.data(), 4);
    for (int r = 0; r < 4; ++r) {
      const std::vector<double> one =
          inverse_map(p, std::vector<double>(block.begin() + r * 5, block.begin() + (r + 1) * 5));
      for (int i = 0; i < 5; ++i) CHECK(batch[r * 5 + i] == one[i]);
    }
  }
  SUBCASE("invalid steps rejected") {
    const MlpParams p = MlpParams::zeros(arch);
    IntegrationConfig cfg;
    cfg.steps = 0;
    CHECK_THROWS_AS(inverse_map(p, std::vector<double>(5, 0.0), cfg), std::invalid_argument);
  }
}

TEST_CASE("anomaly score") {
  CHECK(anomaly_score(std::vector<double>{}) == 0.0);
  CHECK(anomaly_score(std::vector<double>(32, 0.0)) == 0.0);
  CHECK(anomaly_score(std::vector<double>(32, 1.0)) == 32.0);
  CHECK(anomaly_score(std::vector<double>{3.0, 4.0}) == 25.0);
}

TEST_CASE("threshold calibration") {
  SUBCASE("order statistic on 1..100") {
    std::vector<double> scores(100);
    for (int i = 0; i < 100; ++i) scores[i] = i + 1.0;
    const Threshold thr = calibrate_threshold(scores, 0.01);
    CHECK(thr.lambda == 99.0);
    CHECK(thr.calibration_size == 100);
    // empirical exceedance on the calibration set: only the value 100
    int exceed = 0;
    for (double s : scores) exceed += s > thr.lambda ? 1 : 0;
    CHECK(exceed == 1);
  }
  SUBCASE("median at pfa one half") {
    std::vector<double> scores(100);
    for (int i = 0; i < 100; ++i) scores[i] = i + 1.0;
    CHECK(calibrate_threshold(scores, 0.5).lambda == 50.0);
  }
  SUBCASE("monotone in pfa") {
    RandomStream rng(52);
    std::vector<double> scores(977);
    for (auto& s : scores) s = rng.gamma(2.0);
    double prev = std::numeric_limits<double>::infinity();
    for (double pfa : {0.001, 0.01, 0.05, 0.2, 0.5, 0.9}) {
      const double lambda = calibrate_threshold(scores, pfa).lambda;
      CHECK(lambda <= prev);
      prev = lambda;
    }
  }
  SUBCASE("calibration soundness band") {
    RandomStream rng(53);
    for (const double pfa : {0.01, 0.1, 0.37}) {
      std::vector<double> scores(4096);
      for (auto& s : scores) s = rng.normal();
      const Threshold thr = calibrate_threshold(scores, pfa);
      double exceed = 0;
      for (double s : scores) exceed += s > thr.lambda ? 1 : 0;
      exceed /= scores.size();
      CHECK(exceed <= pfa + 1.0 / scores.size());
      CHECK(exceed >= pfa - 1.0 / scores.size());
    }
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(calibrate_threshold({}, 0.01), std::invalid_argument);
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(calibrate_threshold(one, 0.0), std::domain_error);
    CHECK_THROWS_AS(calibrate_threshold(one, 1.0), std::domain_error);
  }
}

TEST_CASE("detect decision rule") {
  NetArchitecture arch;
  arch.data_dim = 4;
  arch.hidden_dims = {4};
  const MlpParams p = MlpParams::zeros(arch);
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};  // score 30 under zero net
  Threshold thr;
  SUBCASE("huge lambda always decides H0") {
    thr.lambda = std::numeric_limits<double>::max();
    CHECK(detect(x, p, thr) == Hypothesis::kH0);
  }
  SUBCASE("negative lambda always decides H1 for nonzero input") {
    thr.lambda = -1.0;
    CHECK(detect(x, p, thr) == Hypothesis::kH1);
  }
  SUBCASE("ties decide H0") {
    thr.lambda = 30.0;
    CHECK(detect(x, p, thr) == Hypothesis::kH0);
    thr.lambda = std::nextafter(30.0, 0.0);
    CHECK(detect(x, p, thr) == Hypothesis::kH1);
  }
  SUBCASE("zero-velocity identity: detect reduces to thresholding the energy") {
    RandomStream rng(54);
    thr.lambda = 4.0;
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> v(4);
      for (auto& e : v) e = rng.normal();
      const bool energy = anomaly_score(v) > thr.lambda;
      CHECK((detect(v, p, thr) == Hypothesis::kH1) == energy);
    }
  }
}

TEST_CASE("trained-flow integration diagnostics") {
  // One small trained model shared by the discretization checks.
  const int dim = 8;
  NetArchitecture arch;
  arch.data_dim = dim;
  arch.hidden_dims = {32, 32};
  const Dataset data = gaussian_dataset(dim, 3000, 60);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.seed = 8;
  auto [params, report] = train(data, arch, cfg);

  SUBCASE("step-halving drift below 2 percent median") {
    RandomStream rng(61);
    std::vector<double> rel;
    IntegrationConfig s64, s128;
    s64.steps = 64;
    s128.steps = 128;
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> x(dim);
      for (auto& v : x) v = rng.normal();
      const double a = anomaly_score(inverse_map(params, x, s64));
      const double b = anomaly_score(inverse_map(params, x, s128));
      rel.push_back(std::abs(a - b) / std::max(std::abs(b), 1e-12));
    }
    std::nth_element(rel.begin(), rel.begin() + rel.size() / 2, rel.end());
    CHECK(rel[rel.size() / 2] < 0.02);
  }
  SUBCASE("coarse-to-fine convergence") {
    RandomStream rng(62);
    std::vector<double> x(dim);
    for (auto& v : x) v = rng.normal();
    IntegrationConfig fine;
    fine.steps = 512;
    const std::vector<double> ref = inverse_map(params, x, fine);
    double prev = std::numeric_limits<double>::infinity();
    for (int steps : {8, 32, 128}) {
      IntegrationConfig c;
      c.steps = steps;
      const std::vector<double> z = inverse_map(params, x, c);
      double err = 0.0, norm = 0.0;
      for (int i = 0; i < dim; ++i) {
        err += (z[i] - ref[i]) * (z[i] - ref[i]);
        norm += ref[i] * ref[i];
      }
      const double rel = std::sqrt(err / norm);
      CHECK(rel < prev);
      prev = rel;
    }
    CHECK(prev < 1e-2);
  }
}

TEST_CASE("monotone alarm rate in target amplitude") {
  // Zero-velocity detector on a fixed noise law; detection rate as a
  // function of the injected amplitude must be non-decreasing within
  // Monte Carlo noise (2-sigma violations allowed).
  NetArchitecture arch;
  arch.data_dim = 8;
  arch.hidden_dims = {4};
  const MlpParams p = MlpParams::zeros(arch);
  RandomStream rng(63);
  std::vector<double> h0_scores(4000);
  std::vector<std::vector<double>> noise(2000, std::vector<double>(8));
  for (auto& s : h0_scores) {
    std::vector<double> v(8);
    for (auto& e : v) e = rng.normal();
    s = anomaly_score(v);
  }
  for (auto& v : noise) {
    for (auto& e : v) e = rng.normal();
  }
  const Threshold thr = calibrate_threshold(h0_scores, 0.05);
  double prev = -1.0;
  const double two_sigma = 2.0 * std::sqrt(0.25 / noise.size());
  for (double amp : {0.0, 0.5, 1.0, 1.5, 2.0, 3.0}) {
    int hits = 0;
    for (const auto& v : noise) {
      std::vector<double> x(v);
      x[0] += amp;  // deterministic injection direction
      hits += detect(x, p, thr) == Hypothesis::kH1 ? 1 : 0;
    }
    const double rate = hits / static_cast<double>(noise.size());
    CHECK(rate >= prev - two_sigma);
    prev = rate;
  }
}
