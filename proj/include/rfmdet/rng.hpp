#pragma once

#include <array>
#include <complex>
#include <cstdint>

namespace rfmdet {

// Purpose tags for deriving independent substreams from one master seed.
// Stage isolation (dataset splits, calibration, Pfa test, Pd sweeps, ...)
// comes from the purpose tag; per-sample isolation from the index.
enum class StreamPurpose : std::uint64_t {
  kDatasetTrain = 1,
  kDatasetValidation = 2,
  kDatasetTest = 3,
  kSecondary = 4,
  kCalibration = 5,
  kPfaTest = 6,
  kPdSweep = 7,
  kBench = 8,
  kNetInit = 9,
  kTrainLoop = 10,
  kGeneric = 11,
};

/// Counter-derived xoshiro256++ stream. Streams derived from the same master
/// seed with distinct (purpose, index) keys are independent for simulation
/// purposes; derivation is stateless, so re-running one pipeline stage never
/// perturbs another stage's draws.
class RandomStream {
 public:
  RandomStream() : RandomStream(0) {}
  explicit RandomStream(std::uint64_t seed);

  static RandomStream derive(std::uint64_t master, StreamPurpose purpose,
                             std::uint64_t index = 0);

  std::uint64_t next_u64();

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform();

  /// Standard normal (Box-Muller; the spare half of each pair is cached).
  double normal();

  /// Circular complex normal CN(0, 1): Re and Im independent N(0, 1/2).
  /// Draws its own Box-Muller pair; does not touch the normal() cache.
  std::complex<double> circular_normal();

  /// Gamma(shape, 1) via Marsaglia-Tsang rejection; shape > 0.
  double gamma(double shape);

 private:
  std::array<std::uint64_t, 4> state_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// 64-bit FNV-1a over a byte range; used for digests and stream keys.
std::uint64_t fnv1a64(const void* data, std::size_t n,
                      std::uint64_t seed = 0xcbf29ce484222325ULL);

/// Mixes integers into a single stream index.
std::uint64_t mix_key(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0);

}  // namespace rfmdet
