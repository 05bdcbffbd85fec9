#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string_view>

#include "rfmdet/classical_detectors.hpp"
#include "rfmdet/drfm_detector.hpp"
#include "rfmdet/scenario.hpp"

namespace rfmdet {

enum class DetectorKind { kMf, kNmf, kAmfScm, kAnmfScm, kAnmfFp, kDrfm };

std::string_view detector_name(DetectorKind kind);
std::optional<DetectorKind> detector_from_name(std::string_view name);
std::optional<double> detector_reference_ms(DetectorKind kind);  // Table-of-record column

/// A detector closed over its fixed inputs. Scoring a batch is deterministic
/// given the per-trial streams (adaptive detectors draw their secondary data
/// from the trial's stream).
class DetectorHandle {
 public:
  virtual ~DetectorHandle() = default;
  virtual DetectorKind kind() const = 0;
  std::string_view name() const { return detector_name(kind()); }

  virtual double score_one(const Observation& obs, RandomStream& rng) const = 0;
  virtual void score(std::span<const Observation> obs, std::span<RandomStream> rngs,
                     std::span<double> out) const;
};

struct AdaptiveOptions {
  std::size_t secondary_count = 0;        // 0 selects K = 2N
  bool resample_per_trial = true;         // false: one block fixed at construction
  std::uint64_t fixed_block_stream = 0;   // stream index for the fixed block
};

std::unique_ptr<DetectorHandle> make_mf_handle(const ScenarioSampler& sampler,
                                               double doppler_bin);
std::unique_ptr<DetectorHandle> make_nmf_handle(const ScenarioSampler& sampler,
                                                double doppler_bin);
std::unique_ptr<DetectorHandle> make_amf_scm_handle(const ScenarioSampler& sampler,
                                                    double doppler_bin,
                                                    const AdaptiveOptions& opts = {});
std::unique_ptr<DetectorHandle> make_anmf_scm_handle(const ScenarioSampler& sampler,
                                                     double doppler_bin,
                                                     const AdaptiveOptions& opts = {});
std::unique_ptr<DetectorHandle> make_anmf_fp_handle(const ScenarioSampler& sampler,
                                                    double doppler_bin,
                                                    const AdaptiveOptions& opts = {});
std::unique_ptr<DetectorHandle> make_drfm_handle(MlpParams params,
                                                 const IntegrationConfig& cfg = {});

using DetectorSuite = std::vector<std::unique_ptr<DetectorHandle>>;

/// All six detectors at the given Doppler bin. D-RFM is included only when
/// params are provided.
DetectorSuite make_detector_suite(const ScenarioSampler& sampler, double doppler_bin,
                                  const MlpParams* drfm_params,
                                  const IntegrationConfig& integration = {},
                                  const AdaptiveOptions& adaptive = {});

struct PdCurve {
  DetectorKind detector = DetectorKind::kMf;
  std::string scenario;
  double doppler_bin = 0.0;
  std::vector<double> snr_grid_db;
  std::vector<double> pd;
  std::vector<double> ci95_halfwidth;  // Wilson
  std::size_t trials_per_point = 0;
};

struct DopplerMap {
  DetectorKind detector = DetectorKind::kMf;
  std::string scenario;
  int n_bins = 0;
  std::vector<double> snr_grid_db;
  std::vector<double> pd;  // n_bins x snr_grid, row-major
  std::size_t trials_per_point = 0;

  double at(int bin, std::size_t snr_idx) const {
    return pd[bin * snr_grid_db.size() + snr_idx];
  }
};

struct BenchEntry {
  DetectorKind detector = DetectorKind::kMf;
  std::string mode;  // "stateless", "amortized", "per-sample"
  double mean_ms = 0.0;
  std::vector<double> per_snr_ms;  // t_i = T_i / N per grid point
  std::size_t samples_per_snr = 0;
  std::size_t snr_points = 0;
  std::optional<double> reference_ms;
};

struct BenchResult {
  std::vector<BenchEntry> entries;
};

/// Per-detector thresholds at the requested Pfa from shared H0 validation
/// observations; each detector sees its own secondary-data streams.
std::vector<Threshold> calibrate_all(const DetectorSuite& suite,
                                     std::span<const Observation> h0_validation,
                                     double pfa, std::uint64_t master_seed,
                                     int threads = 1);

double measure_pfa(const DetectorHandle& handle, const Threshold& threshold,
                   std::span<const Observation> h0_test, std::uint64_t master_seed,
                   int threads = 1);

PdCurve pd_sweep(const DetectorHandle& handle, const Threshold& threshold,
                 std::span<const double> snr_grid_db, double doppler_bin,
                 std::size_t trials, const ScenarioSampler& sampler,
                 int threads = 1);

DopplerMap doppler_map(const DetectorHandle& handle, const Threshold& threshold,
                       std::span<const double> snr_grid_db, std::size_t trials,
                       const ScenarioSampler& sampler, int threads = 1);

struct BenchOptions {
  std::size_t samples_per_snr = 1000;  // N per SNR value
  double snr_min_db = 0.0;
  double snr_max_db = 20.0;            // inclusive integer grid
  double doppler_bin = 0.0;
};

/// Average per-sample detection time t = (1/S) sum_i T_i / N over the SNR
/// grid; runs strictly sequentially. Data generation is excluded from the
/// timed region; covariance estimation is included only in per-sample mode.
BenchResult bench(const DetectorSuite& suite, std::span<const Threshold> thresholds,
                  const ScenarioSampler& sampler, const BenchOptions& opts = {});

/// H0 observations with per-sample streams for the given purpose.
std::vector<Observation> make_h0_observations(const ScenarioSampler& sampler,
                                              std::size_t count, StreamPurpose purpose);

std::vector<Observation> dataset_to_observations(const Dataset& ds);

double wilson_halfwidth(double p_hat, std::size_t n);

// CSV / SVG emission. Files are deterministic functions of their inputs.
void write_pd_curves_csv(std::span<const PdCurve> curves, const std::filesystem::path& path);
std::vector<PdCurve> read_pd_curves_csv(const std::filesystem::path& path);
void write_doppler_maps_csv(std::span<const DopplerMap> maps, const std::filesystem::path& path);
void write_bench_csv(const BenchResult& result, const std::filesystem::path& path);
void write_thresholds_csv(const DetectorSuite& suite, std::span<const Threshold> thresholds,
                          const std::filesystem::path& path);
void write_pd_curves_svg(std::span<const PdCurve> curves, const std::filesystem::path& path);
void write_doppler_map_svg(const DopplerMap& map, const std::filesystem::path& path);

}  // namespace rfmdet
