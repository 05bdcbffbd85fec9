#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rfmdet/rng.hpp"
#include "rfmdet/scenario.hpp"

namespace rfmdet {

struct NetArchitecture {
  int data_dim = 32;                     // D
  std::vector<int> hidden_dims{256, 256};

  int input_dim() const { return data_dim + 1; }  // time appended to the input
  int output_dim() const { return data_dim; }
  std::vector<int> layer_dims() const;            // {D+1, hidden..., D}
  bool operator==(const NetArchitecture&) const = default;
};

/// Rectifier MLP parameters; weights are row-major (out x in), 64-bit.
struct MlpParams {
  NetArchitecture arch;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  std::size_t layer_count() const { return weights.size(); }
  std::size_t parameter_count() const;
  std::uint64_t digest() const;

  static MlpParams zeros(const NetArchitecture& arch);
};

/// He-normal weights (std sqrt(2/fan_in)), zero biases.
MlpParams init_params(const NetArchitecture& arch, RandomStream& rng);

struct AdamState {
  std::vector<std::vector<double>> m_weights, v_weights;
  std::vector<std::vector<double>> m_biases, v_biases;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const MlpParams& params);
};

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 128;
  int epochs = 170;
  std::uint64_t seed = 1;
};

struct TrainReport {
  std::vector<double> epoch_mean_loss;
  double wall_seconds = 0.0;
  std::uint64_t params_digest = 0;
};

/// One training batch: rows of (x0, x1, t).
struct FlowBatch {
  std::size_t size = 0;
  int dim = 0;
  std::vector<double> x0;  // size x dim, row-major
  std::vector<double> x1;
  std::vector<double> t;   // size
};

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;

  static Gradients for_params(const MlpParams& params);
};

std::vector<double> interpolate(std::span<const double> x0,
                                std::span<const double> x1, double t);

std::vector<double> forward(const MlpParams& params, std::span<const double> x,
                            double t);

/// Batch forward: x is m x D row-major, t holds one time per row; out m x D.
void forward_batch(const MlpParams& params, const double* x, const double* t,
                   std::size_t m, double* out);

/// Mean over the batch of the squared Euclidean error between the predicted
/// velocity at the interpolated point and (x1 - x0).
double rfm_loss(const MlpParams& params, const FlowBatch& batch);

Gradients gradients(const MlpParams& params, const FlowBatch& batch);

/// Computes loss and accumulates exact gradients in one pass.
double loss_and_gradients(const MlpParams& params, const FlowBatch& batch,
                          Gradients& grads);

void adam_step(MlpParams& params, const Gradients& grads, AdamState& state, double lr);

std::pair<MlpParams, TrainReport> train(const Dataset& train_set,
                                        const NetArchitecture& arch,
                                        const TrainConfig& cfg);

struct EmbeddedThreshold {
  double lambda = 0.0;
  double pfa_target = 0.0;
  std::uint64_t calibration_size = 0;
  std::uint64_t scenario_digest = 0;
};

struct CheckpointMeta {
  NetArchitecture arch;
  TrainConfig train_config;
  double final_epoch_loss = 0.0;
  std::uint64_t epoch_loss_digest = 0;
  int epochs_trained = 0;
  std::optional<EmbeddedThreshold> threshold;
};

struct Checkpoint {
  MlpParams params;
  CheckpointMeta meta;
};

/// Wire format RFN1: magic "RFN1", little-endian u32 version, u64 JSON header
/// length, JSON header, raw 64-bit parameters in layer order (W then b per
/// layer), then a 64-bit FNV-1a checksum of the payload.
void save_checkpoint(const MlpParams& params, const CheckpointMeta& meta,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Rewrites the checkpoint with a calibrated threshold embedded in the header.
void embed_threshold(const std::filesystem::path& path, const EmbeddedThreshold& thr);

}  // namespace rfmdet
