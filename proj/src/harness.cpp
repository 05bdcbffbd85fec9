#include "rfmdet/harness.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <functional>
#include <thread>

namespace rfmdet {

namespace {

constexpr std::size_t kDrfmChunk = 256;  // rows per batched Euler pass

std::uint64_t kind_tag(DetectorKind kind) {
  return static_cast<std::uint64_t>(kind) + 1;
}

void parallel_chunks(std::size_t n, int threads,
                     const std::function<void(std::size_t, std::size_t)>& fn) {
  if (threads <= 1 || n < 2 * static_cast<std::size_t>(threads)) {
    fn(0, n);
    return;
  }
  const std::size_t workers = static_cast<std::size_t>(threads);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t per = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * per;
    const std::size_t end = std::min(n, begin + per);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end] { fn(begin, end); });
  }
  for (auto& th : pool) th.join();
}

class MfHandle final : public DetectorHandle {
 public:
  MfHandle(const ScenarioSampler& sampler, double doppler_bin)
      : chol_(cholesky(sampler.covariance().total)),
        p_(steering_vector(doppler_bin, sampler.config().n_pulses)) {}

  DetectorKind kind() const override { return DetectorKind::kMf; }
  double score_one(const Observation& obs, RandomStream&) const override {
    return mf_statistic(obs.y, p_, chol_);
  }

 private:
  LowerTriangular chol_;
  ComplexVector p_;
};

class NmfHandle final : public DetectorHandle {
 public:
  NmfHandle(const ScenarioSampler& sampler, double doppler_bin)
      : chol_(cholesky(sampler.covariance().total)),
        p_(steering_vector(doppler_bin, sampler.config().n_pulses)) {}

  DetectorKind kind() const override { return DetectorKind::kNmf; }
  double score_one(const Observation& obs, RandomStream&) const override {
    return nmf_statistic(obs.y, p_, chol_);
  }

 private:
  LowerTriangular chol_;
  ComplexVector p_;
};

enum class AdaptiveStat { kAmf, kAnmfScm, kAnmfFp };

class AdaptiveHandle final : public DetectorHandle {
 public:
  AdaptiveHandle(AdaptiveStat stat, const ScenarioSampler& sampler, double doppler_bin,
                 const AdaptiveOptions& opts)
      : stat_(stat),
        sampler_(sampler),
        p_(steering_vector(doppler_bin, sampler.config().n_pulses)),
        k_(opts.secondary_count != 0
               ? opts.secondary_count
               : static_cast<std::size_t>(2 * sampler.config().n_pulses)),
        resample_(opts.resample_per_trial) {
    if (!resample_) {
      RandomStream rng = RandomStream::derive(sampler.config().seed,
                                              StreamPurpose::kSecondary,
                                              opts.fixed_block_stream);
      fixed_chol_.emplace(cholesky(estimate(sampler_.sample_secondary(k_, rng).z)));
    }
  }

  DetectorKind kind() const override {
    switch (stat_) {
      case AdaptiveStat::kAmf: return DetectorKind::kAmfScm;
      case AdaptiveStat::kAnmfScm: return DetectorKind::kAnmfScm;
      case AdaptiveStat::kAnmfFp: return DetectorKind::kAnmfFp;
    }
    return DetectorKind::kAmfScm;
  }

  double score_one(const Observation& obs, RandomStream& rng) const override {
    if (!resample_) return statistic(obs, *fixed_chol_);
    const SecondaryData sd = sampler_.sample_secondary(k_, rng);
    return statistic(obs, cholesky(estimate(sd.z)));
  }

  SecondaryData draw_secondary(RandomStream& rng) const {
    return sampler_.sample_secondary(k_, rng);
  }
  double estimate_and_score(const Observation& obs,
                            std::span<const ComplexVector> z) const {
    return statistic(obs, cholesky(estimate(z)));
  }

 private:
  HermitianMatrix estimate(std::span<const ComplexVector> z) const {
    return stat_ == AdaptiveStat::kAnmfFp ? tyler_fp(z).matrix : scm(z).matrix;
  }
  double statistic(const Observation& obs, const LowerTriangular& chol) const {
    return stat_ == AdaptiveStat::kAmf ? mf_statistic(obs.y, p_, chol)
                                       : nmf_statistic(obs.y, p_, chol);
  }

  AdaptiveStat stat_;
  ScenarioSampler sampler_;
  ComplexVector p_;
  std::size_t k_;
  bool resample_;
  std::optional<LowerTriangular> fixed_chol_;
};

class DrfmHandle final : public DetectorHandle {
 public:
  DrfmHandle(MlpParams params, const IntegrationConfig& cfg)
      : params_(std::move(params)), cfg_(cfg) {}

  DetectorKind kind() const override { return DetectorKind::kDrfm; }

  double score_one(const Observation& obs, RandomStream&) const override {
    const std::vector<double> x = embed_real(obs.y);
    return anomaly_scores(params_, x.data(), 1, cfg_)[0];
  }

  void score(std::span<const Observation> obs, std::span<RandomStream>,
             std::span<double> out) const override {
    const int d = params_.arch.data_dim;
    std::vector<double> block(kDrfmChunk * static_cast<std::size_t>(d));
    for (std::size_t start = 0; start < obs.size(); start += kDrfmChunk) {
      const std::size_t m = std::min(kDrfmChunk, obs.size() - start);
      for (std::size_t r = 0; r < m; ++r) {
        const ComplexVector& y = obs[start + r].y;
        double* row = block.data() + r * d;
        const int n = d / 2;
        for (int j = 0; j < n; ++j) {
          row[j] = y[j].real();
          row[n + j] = y[j].imag();
        }
      }
      const std::vector<double> scores = anomaly_scores(params_, block.data(), m, cfg_);
      std::copy(scores.begin(), scores.end(), out.begin() + start);
    }
  }

  const MlpParams& params() const { return params_; }

 private:
  MlpParams params_;
  IntegrationConfig cfg_;
};

std::vector<RandomStream> make_streams(std::uint64_t master, StreamPurpose purpose,
                                       std::uint64_t tag, std::size_t count) {
  std::vector<RandomStream> rngs;
  rngs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    rngs.push_back(RandomStream::derive(master, purpose, mix_key(tag, i)));
  }
  return rngs;
}

}  // namespace

std::string_view detector_name(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kMf: return "MF";
    case DetectorKind::kNmf: return "NMF";
    case DetectorKind::kAmfScm: return "AMF-SCM";
    case DetectorKind::kAnmfScm: return "ANMF-SCM";
    case DetectorKind::kAnmfFp: return "ANMF-FP";
    case DetectorKind::kDrfm: return "D-RFM";
  }
  return "?";
}

std::optional<DetectorKind> detector_from_name(std::string_view name) {
  for (DetectorKind k : {DetectorKind::kMf, DetectorKind::kNmf, DetectorKind::kAmfScm,
                         DetectorKind::kAnmfScm, DetectorKind::kAnmfFp,
                         DetectorKind::kDrfm}) {
    if (detector_name(k) == name) return k;
  }
  return std::nullopt;
}

std::optional<double> detector_reference_ms(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kMf: return 0.0516;
    case DetectorKind::kNmf: return 0.1376;
    case DetectorKind::kAmfScm: return 0.0970;
    case DetectorKind::kAnmfScm: return std::nullopt;
    case DetectorKind::kAnmfFp: return 1.9255;
    case DetectorKind::kDrfm: return 0.0209;
  }
  return std::nullopt;
}

void DetectorHandle::score(std::span<const Observation> obs,
                           std::span<RandomStream> rngs,
                           std::span<double> out) const {
  for (std::size_t i = 0; i < obs.size(); ++i) out[i] = score_one(obs[i], rngs[i]);
}

std::unique_ptr<DetectorHandle> make_mf_handle(const ScenarioSampler& sampler,
                                               double doppler_bin) {
  return std::make_unique<MfHandle>(sampler, doppler_bin);
}
std::unique_ptr<DetectorHandle> make_nmf_handle(const ScenarioSampler& sampler,
                                                double doppler_bin) {
  return std::make_unique<NmfHandle>(sampler, doppler_bin);
}
std::unique_ptr<DetectorHandle> make_amf_scm_handle(const ScenarioSampler& sampler,
                                                    double doppler_bin,
                                                    const AdaptiveOptions& opts) {
  return std::make_unique<AdaptiveHandle>(AdaptiveStat::kAmf, sampler, doppler_bin, opts);
}
std::unique_ptr<DetectorHandle> make_anmf_scm_handle(const ScenarioSampler& sampler,
                                                     double doppler_bin,
                                                     const AdaptiveOptions& opts) {
  return std::make_unique<AdaptiveHandle>(AdaptiveStat::kAnmfScm, sampler, doppler_bin,
                                          opts);
}
std::unique_ptr<DetectorHandle> make_anmf_fp_handle(const ScenarioSampler& sampler,
                                                    double doppler_bin,
                                                    const AdaptiveOptions& opts) {
  return std::make_unique<AdaptiveHandle>(AdaptiveStat::kAnmfFp, sampler, doppler_bin,
                                          opts);
}
std::unique_ptr<DetectorHandle> make_drfm_handle(MlpParams params,
                                                 const IntegrationConfig& cfg) {
  return std::make_unique<DrfmHandle>(std::move(params), cfg);
}

DetectorSuite make_detector_suite(const ScenarioSampler& sampler, double doppler_bin,
                                  const MlpParams* drfm_params,
                                  const IntegrationConfig& integration,
                                  const AdaptiveOptions& adaptive) {
  DetectorSuite suite;
  suite.push_back(make_mf_handle(sampler, doppler_bin));
  suite.push_back(make_nmf_handle(sampler, doppler_bin));
  suite.push_back(make_amf_scm_handle(sampler, doppler_bin, adaptive));
  suite.push_back(make_anmf_scm_handle(sampler, doppler_bin, adaptive));
  suite.push_back(make_anmf_fp_handle(sampler, doppler_bin, adaptive));
  if (drfm_params != nullptr) {
    suite.push_back(make_drfm_handle(*drfm_params, integration));
  }
  return suite;
}

std::vector<Observation> make_h0_observations(const ScenarioSampler& sampler,
                                              std::size_t count, StreamPurpose purpose) {
  std::vector<Observation> obs;
  obs.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    RandomStream rng = RandomStream::derive(sampler.config().seed, purpose, i);
    Observation o;
    o.hypothesis = Hypothesis::kH0;
    o.y = sampler.sample_h0(rng);
    obs.push_back(std::move(o));
  }
  return obs;
}

std::vector<Observation> dataset_to_observations(const Dataset& ds) {
  std::vector<Observation> obs;
  obs.reserve(ds.rows);
  for (std::size_t i = 0; i < ds.rows; ++i) {
    Observation o;
    o.hypothesis = Hypothesis::kH0;
    o.y = unembed_real(std::span<const double>(ds.row(i), ds.cols));
    obs.push_back(std::move(o));
  }
  return obs;
}

double wilson_halfwidth(double p_hat, std::size_t n) {
  constexpr double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double z2 = z * z;
  return z * std::sqrt(p_hat * (1.0 - p_hat) / nn + z2 / (4.0 * nn * nn)) /
         (1.0 + z2 / nn);
}

std::vector<Threshold> calibrate_all(const DetectorSuite& suite,
                                     std::span<const Observation> h0_validation,
                                     double pfa, std::uint64_t master_seed,
                                     int threads) {
  if (h0_validation.empty()) {
    throw std::invalid_argument("calibrate_all: empty validation set");
  }
  std::vector<Threshold> thresholds;
  thresholds.reserve(suite.size());
  std::vector<double> scores(h0_validation.size());
  for (const auto& handle : suite) {
    auto rngs = make_streams(master_seed, StreamPurpose::kCalibration,
                             kind_tag(handle->kind()), h0_validation.size());
    parallel_chunks(h0_validation.size(), threads, [&](std::size_t b, std::size_t e) {
      handle->score(h0_validation.subspan(b, e - b),
                    std::span<RandomStream>(rngs).subspan(b, e - b),
                    std::span<double>(scores).subspan(b, e - b));
    });
    thresholds.push_back(calibrate_threshold(scores, pfa));
  }
  return thresholds;
}

double measure_pfa(const DetectorHandle& handle, const Threshold& threshold,
                   std::span<const Observation> h0_test, std::uint64_t master_seed,
                   int threads) {
  if (h0_test.empty()) return 0.0;
  std::vector<double> scores(h0_test.size());
  auto rngs = make_streams(master_seed, StreamPurpose::kPfaTest,
                           kind_tag(handle.kind()), h0_test.size());
  parallel_chunks(h0_test.size(), threads, [&](std::size_t b, std::size_t e) {
    handle.score(h0_test.subspan(b, e - b),
                 std::span<RandomStream>(rngs).subspan(b, e - b),
                 std::span<double>(scores).subspan(b, e - b));
  });
  std::size_t alarms = 0;
  for (double s : scores) alarms += s > threshold.lambda ? 1 : 0;
  return static_cast<double>(alarms) / static_cast<double>(h0_test.size());
}

PdCurve pd_sweep(const DetectorHandle& handle, const Threshold& threshold,
                 std::span<const double> snr_grid_db, double doppler_bin,
                 std::size_t trials, const ScenarioSampler& sampler, int threads) {
  PdCurve curve;
  curve.detector = handle.kind();
  curve.scenario = sampler.config().scenario_label();
  curve.doppler_bin = doppler_bin;
  curve.snr_grid_db.assign(snr_grid_db.begin(), snr_grid_db.end());
  curve.trials_per_point = trials;

  const std::uint64_t seed = sampler.config().seed;
  const std::uint64_t d_bits = std::bit_cast<std::uint64_t>(doppler_bin);
  std::vector<Observation> obs(trials);
  std::vector<double> scores(trials);
  for (std::size_t si = 0; si < snr_grid_db.size(); ++si) {
    const double snr_db = snr_grid_db[si];
    // Streams are keyed by (bin, SNR value, trial, detector) so any grid
    // point re-evaluates identically regardless of grid layout, execution
    // order, or suite composition.
    const std::uint64_t snr_bits = std::bit_cast<std::uint64_t>(snr_db);
    std::vector<RandomStream> rngs;
    rngs.reserve(trials);
    for (std::size_t trial = 0; trial < trials; ++trial) {
      rngs.push_back(RandomStream::derive(
          seed, StreamPurpose::kPdSweep,
          mix_key(mix_key(d_bits, snr_bits, kind_tag(handle.kind())), trial)));
      obs[trial] = sampler.sample(Hypothesis::kH1, snr_db, doppler_bin, rngs[trial]);
    }
    parallel_chunks(trials, threads, [&](std::size_t b, std::size_t e) {
      handle.score(std::span<const Observation>(obs).subspan(b, e - b),
                   std::span<RandomStream>(rngs).subspan(b, e - b),
                   std::span<double>(scores).subspan(b, e - b));
    });
    std::size_t detections = 0;
    for (double s : scores) detections += s > threshold.lambda ? 1 : 0;
    const double pd = static_cast<double>(detections) / static_cast<double>(trials);
    curve.pd.push_back(pd);
    curve.ci95_halfwidth.push_back(wilson_halfwidth(pd, trials));
  }
  return curve;
}

DopplerMap doppler_map(const DetectorHandle& handle, const Threshold& threshold,
                       std::span<const double> snr_grid_db, std::size_t trials,
                       const ScenarioSampler& sampler, int threads) {
  DopplerMap map;
  map.detector = handle.kind();
  map.scenario = sampler.config().scenario_label();
  map.n_bins = sampler.config().n_pulses;
  map.snr_grid_db.assign(snr_grid_db.begin(), snr_grid_db.end());
  map.trials_per_point = trials;
  for (int bin = 0; bin < map.n_bins; ++bin) {
    const PdCurve row = pd_sweep(handle, threshold, snr_grid_db,
                                 static_cast<double>(bin), trials, sampler, threads);
    map.pd.insert(map.pd.end(), row.pd.begin(), row.pd.end());
  }
  return map;
}

BenchResult bench(const DetectorSuite& suite, std::span<const Threshold> thresholds,
                  const ScenarioSampler& sampler, const BenchOptions& opts) {
  if (thresholds.size() != suite.size()) {
    throw std::invalid_argument("bench: one threshold per detector required");
  }
  std::vector<double> snr_grid;
  for (double s = opts.snr_min_db; s <= opts.snr_max_db + 1e-9; s += 1.0) {
    snr_grid.push_back(s);
  }
  const std::uint64_t seed = sampler.config().seed;

  BenchResult result;
  volatile std::size_t alarm_sink = 0;  // keeps decisions from being optimized out
  for (std::size_t h = 0; h < suite.size(); ++h) {
    const DetectorHandle& handle = *suite[h];
    const double lambda = thresholds[h].lambda;
    const bool adaptive = handle.kind() == DetectorKind::kAmfScm ||
                          handle.kind() == DetectorKind::kAnmfScm ||
                          handle.kind() == DetectorKind::kAnmfFp;
    const std::vector<std::string> modes =
        adaptive ? std::vector<std::string>{"amortized", "per-sample"}
                 : std::vector<std::string>{"stateless"};

    // Amortized mode scores against one fixed estimate, computed untimed.
    std::unique_ptr<DetectorHandle> amortized;
    if (adaptive) {
      AdaptiveOptions fixed_opts;
      fixed_opts.resample_per_trial = false;
      switch (handle.kind()) {
        case DetectorKind::kAmfScm:
          amortized = make_amf_scm_handle(sampler, opts.doppler_bin, fixed_opts);
          break;
        case DetectorKind::kAnmfScm:
          amortized = make_anmf_scm_handle(sampler, opts.doppler_bin, fixed_opts);
          break;
        default:
          amortized = make_anmf_fp_handle(sampler, opts.doppler_bin, fixed_opts);
          break;
      }
    }

    for (const std::string& mode : modes) {
      std::vector<double> per_snr_ms;
      per_snr_ms.reserve(snr_grid.size());
      for (std::size_t si = 0; si < snr_grid.size(); ++si) {
        // Pre-draw observations, streams, and (per-sample mode) secondary
        // blocks; data generation stays outside the timed region.
        std::vector<Observation> obs(opts.samples_per_snr);
        std::vector<RandomStream> rngs;
        rngs.reserve(opts.samples_per_snr);
        std::vector<SecondaryData> blocks;
        const auto* adaptive_impl = dynamic_cast<const AdaptiveHandle*>(&handle);
        for (std::size_t i = 0; i < opts.samples_per_snr; ++i) {
          rngs.push_back(RandomStream::derive(
              seed, StreamPurpose::kBench, mix_key(kind_tag(handle.kind()), si, i)));
          obs[i] = sampler.sample(Hypothesis::kH1, snr_grid[si], opts.doppler_bin,
                                  rngs[i]);
          if (mode == "per-sample") blocks.push_back(adaptive_impl->draw_secondary(rngs[i]));
        }

        std::size_t alarms = 0;
        const auto t0 = std::chrono::steady_clock::now();
        if (handle.kind() == DetectorKind::kDrfm) {
          // Batched scoring; the total over the block divided by the count.
          std::vector<double> scores(opts.samples_per_snr);
          handle.score(obs, rngs, scores);
          for (double s : scores) alarms += s > lambda ? 1 : 0;
        } else if (mode == "per-sample") {
          for (std::size_t i = 0; i < opts.samples_per_snr; ++i) {
            alarms += adaptive_impl->estimate_and_score(obs[i], blocks[i].z) > lambda;
          }
        } else {
          const DetectorHandle& active = mode == "amortized" ? *amortized : handle;
          for (std::size_t i = 0; i < opts.samples_per_snr; ++i) {
            alarms += active.score_one(obs[i], rngs[i]) > lambda ? 1 : 0;
          }
        }
        const double elapsed_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        alarm_sink = alarm_sink + alarms;
        per_snr_ms.push_back(elapsed_s * 1e3 / static_cast<double>(opts.samples_per_snr));
      }
      BenchEntry entry;
      entry.detector = handle.kind();
      entry.mode = mode;
      double sum = 0.0;
      for (double t : per_snr_ms) sum += t;
      entry.mean_ms = sum / static_cast<double>(snr_grid.size());
      entry.per_snr_ms = std::move(per_snr_ms);
      entry.samples_per_snr = opts.samples_per_snr;
      entry.snr_points = snr_grid.size();
      entry.reference_ms = detector_reference_ms(handle.kind());
      result.entries.push_back(std::move(entry));
    }
  }
  return result;
}

}  // namespace rfmdet
