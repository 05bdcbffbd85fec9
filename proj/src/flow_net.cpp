#include "rfmdet/flow_net.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace rfmdet {

namespace {

// C (m x out) = A (m x in) . Wt + bias, with Wt the in x out transposed
// weights. The axpy-over-outputs form keeps the inner loop contiguous and
// free of reduction chains; zero activations (ReLU output) are skipped.
void affine_forward_t(const double* a, std::size_t m, int in, const double* wt,
                      const double* bias, int out, double* c) {
  for (std::size_t r = 0; r < m; ++r) {
    double* cr = c + r * out;
    std::memcpy(cr, bias, sizeof(double) * out);
    const double* ar = a + r * in;
    for (int i = 0; i < in; ++i) {
      const double av = ar[i];
      if (av == 0.0) continue;
      const double* wi = wt + static_cast<std::size_t>(i) * out;
      for (int o = 0; o < out; ++o) cr[o] += av * wi[o];
    }
  }
}

void relu_inplace(double* z, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) z[i] = z[i] > 0.0 ? z[i] : 0.0;
}

// Scratch buffers reused across batches.
struct Workspace {
  std::vector<std::vector<double>> acts;  // acts[0] = input, acts[l+1] = layer l output
  std::vector<std::vector<double>> wt;    // transposed weights per layer
  std::vector<double> delta, delta_next;

  void resize(const std::vector<int>& dims, std::size_t m) {
    acts.resize(dims.size());
    std::size_t widest = 0;
    for (std::size_t l = 0; l < dims.size(); ++l) {
      acts[l].resize(m * static_cast<std::size_t>(dims[l]));
      widest = std::max(widest, static_cast<std::size_t>(dims[l]));
    }
    delta.resize(m * widest);
    delta_next.resize(m * widest);
  }

  void load_transposed(const MlpParams& params, const std::vector<int>& dims) {
    wt.resize(params.layer_count());
    for (std::size_t l = 0; l < params.layer_count(); ++l) {
      const int in = dims[l];
      const int out = dims[l + 1];
      wt[l].resize(static_cast<std::size_t>(in) * out);
      const double* w = params.weights[l].data();
      for (int o = 0; o < out; ++o) {
        for (int i = 0; i < in; ++i) {
          wt[l][static_cast<std::size_t>(i) * out + o] =
              w[static_cast<std::size_t>(o) * in + i];
        }
      }
    }
  }
};

// Builds acts[0] = [interpolate(x0, x1, t); t] for the whole batch.
void fill_batch_input(const FlowBatch& batch, std::vector<double>& input) {
  const int d = batch.dim;
  for (std::size_t r = 0; r < batch.size; ++r) {
    const double t = batch.t[r];
    const double* x0 = batch.x0.data() + r * d;
    const double* x1 = batch.x1.data() + r * d;
    double* row = input.data() + r * (d + 1);
    for (int i = 0; i < d; ++i) row[i] = (1.0 - t) * x0[i] + t * x1[i];
    row[d] = t;
  }
}

void run_forward(const MlpParams& params, Workspace& ws, std::size_t m) {
  const auto dims = params.arch.layer_dims();
  const std::size_t layers = params.layer_count();
  ws.load_transposed(params, dims);
  for (std::size_t l = 0; l < layers; ++l) {
    affine_forward_t(ws.acts[l].data(), m, dims[l], ws.wt[l].data(),
                     params.biases[l].data(), dims[l + 1], ws.acts[l + 1].data());
    if (l + 1 < layers) relu_inplace(ws.acts[l + 1].data(), m * dims[l + 1]);
  }
}

double backward_pass(const MlpParams& params, const FlowBatch& batch,
                     Workspace& ws, Gradients* grads) {
  const auto dims = params.arch.layer_dims();
  const std::size_t layers = params.layer_count();
  const std::size_t m = batch.size;
  const int d = batch.dim;

  // delta <- dLoss/d(out) = 2 (out - (x1 - x0)) / m; loss accumulated alongside.
  double loss = 0.0;
  const double inv_m = 1.0 / static_cast<double>(m);
  double* out = ws.acts[layers].data();
  for (std::size_t r = 0; r < m; ++r) {
    const double* x0 = batch.x0.data() + r * d;
    const double* x1 = batch.x1.data() + r * d;
    double* orow = out + r * d;
    double* drow = ws.delta.data() + r * d;
    for (int i = 0; i < d; ++i) {
      const double diff = orow[i] - (x1[i] - x0[i]);
      loss += diff * diff;
      drow[i] = 2.0 * diff * inv_m;
    }
  }
  loss *= inv_m;
  if (grads == nullptr) return loss;

  for (std::size_t l = layers; l-- > 0;) {
    const int in = dims[l];
    const int out_dim = dims[l + 1];
    double* gw = grads->weights[l].data();
    double* gb = grads->biases[l].data();
    const double* a = ws.acts[l].data();
    // dW[o][i] += delta[r][o] * a[r][i]; db[o] += delta[r][o].
    for (std::size_t r = 0; r < m; ++r) {
      const double* dr = ws.delta.data() + r * out_dim;
      const double* ar = a + r * in;
      for (int o = 0; o < out_dim; ++o) {
        const double g = dr[o];
        if (g == 0.0) continue;
        gb[o] += g;
        double* gwo = gw + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) gwo[i] += g * ar[i];
      }
    }
    if (l == 0) break;
    // delta_next[r][i] = sum_o delta[r][o] W[o][i], masked by relu'(z) = (a > 0).
    const double* w = params.weights[l].data();
    for (std::size_t r = 0; r < m; ++r) {
      const double* dr = ws.delta.data() + r * out_dim;
      double* dn = ws.delta_next.data() + r * in;
      std::memset(dn, 0, sizeof(double) * in);
      for (int o = 0; o < out_dim; ++o) {
        const double g = dr[o];
        if (g == 0.0) continue;
        const double* wo = w + static_cast<std::size_t>(o) * in;
        for (int i = 0; i < in; ++i) dn[i] += g * wo[i];
      }
      const double* ar = a + r * in;
      for (int i = 0; i < in; ++i) {
        if (ar[i] <= 0.0) dn[i] = 0.0;  // subgradient at 0 taken as 0
      }
    }
    std::swap(ws.delta, ws.delta_next);
  }
  return loss;
}

void check_batch(const MlpParams& params, const FlowBatch& batch) {
  if (batch.size == 0) throw std::invalid_argument("empty batch");
  if (batch.dim != params.arch.data_dim) {
    throw std::invalid_argument("batch dimension does not match architecture");
  }
  if (batch.x0.size() != batch.size * batch.dim ||
      batch.x1.size() != batch.size * batch.dim || batch.t.size() != batch.size) {
    throw std::invalid_argument("inconsistent batch buffers");
  }
}

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <typename T>
T take(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint file");
  return v;
}

}  // namespace

std::vector<int> NetArchitecture::layer_dims() const {
  std::vector<int> dims;
  dims.push_back(input_dim());
  for (int h : hidden_dims) dims.push_back(h);
  dims.push_back(output_dim());
  return dims;
}

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) n += weights[l].size() + biases[l].size();
  return n;
}

std::uint64_t MlpParams::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    h = fnv1a64(weights[l].data(), weights[l].size() * sizeof(double), h);
    h = fnv1a64(biases[l].data(), biases[l].size() * sizeof(double), h);
  }
  return h;
}

MlpParams MlpParams::zeros(const NetArchitecture& arch) {
  MlpParams p;
  p.arch = arch;
  const auto dims = arch.layer_dims();
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    p.weights.emplace_back(static_cast<std::size_t>(dims[l + 1]) * dims[l], 0.0);
    p.biases.emplace_back(dims[l + 1], 0.0);
  }
  return p;
}

MlpParams init_params(const NetArchitecture& arch, RandomStream& rng) {
  MlpParams p = MlpParams::zeros(arch);
  const auto dims = arch.layer_dims();
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const double scale = std::sqrt(2.0 / dims[l]);
    for (auto& w : p.weights[l]) w = scale * rng.normal();
  }
  return p;
}

AdamState AdamState::for_params(const MlpParams& params) {
  AdamState s;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    s.m_weights.emplace_back(params.weights[l].size(), 0.0);
    s.v_weights.emplace_back(params.weights[l].size(), 0.0);
    s.m_biases.emplace_back(params.biases[l].size(), 0.0);
    s.v_biases.emplace_back(params.biases[l].size(), 0.0);
  }
  return s;
}

Gradients Gradients::for_params(const MlpParams& params) {
  Gradients g;
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    g.weights.emplace_back(params.weights[l].size(), 0.0);
    g.biases.emplace_back(params.biases[l].size(), 0.0);
  }
  return g;
}

std::vector<double> interpolate(std::span<const double> x0,
                                std::span<const double> x1, double t) {
  if (x0.size() != x1.size()) throw std::invalid_argument("dimension mismatch");
  std::vector<double> xt(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) xt[i] = (1.0 - t) * x0[i] + t * x1[i];
  return xt;
}

std::vector<double> forward(const MlpParams& params, std::span<const double> x,
                            double t) {
  if (static_cast<int>(x.size()) != params.arch.data_dim) {
    throw std::invalid_argument("forward: input dimension mismatch");
  }
  std::vector<double> out(params.arch.output_dim());
  const double tval = t;
  forward_batch(params, x.data(), &tval, 1, out.data());
  return out;
}

void forward_batch(const MlpParams& params, const double* x, const double* t,
                   std::size_t m, double* out) {
  const auto dims = params.arch.layer_dims();
  const int d = params.arch.data_dim;
  thread_local Workspace ws;
  ws.resize(dims, m);
  for (std::size_t r = 0; r < m; ++r) {
    double* row = ws.acts[0].data() + r * (d + 1);
    std::memcpy(row, x + r * d, sizeof(double) * d);
    row[d] = t[r];
  }
  run_forward(params, ws, m);
  std::memcpy(out, ws.acts[params.layer_count()].data(), sizeof(double) * m * d);
}

double rfm_loss(const MlpParams& params, const FlowBatch& batch) {
  check_batch(params, batch);
  thread_local Workspace ws;
  ws.resize(params.arch.layer_dims(), batch.size);
  fill_batch_input(batch, ws.acts[0]);
  run_forward(params, ws, batch.size);
  return backward_pass(params, batch, ws, nullptr);
}

Gradients gradients(const MlpParams& params, const FlowBatch& batch) {
  Gradients g = Gradients::for_params(params);
  loss_and_gradients(params, batch, g);
  return g;
}

double loss_and_gradients(const MlpParams& params, const FlowBatch& batch,
                          Gradients& grads) {
  check_batch(params, batch);
  for (std::size_t l = 0; l < grads.weights.size(); ++l) {
    std::fill(grads.weights[l].begin(), grads.weights[l].end(), 0.0);
    std::fill(grads.biases[l].begin(), grads.biases[l].end(), 0.0);
  }
  thread_local Workspace ws;
  ws.resize(params.arch.layer_dims(), batch.size);
  fill_batch_input(batch, ws.acts[0]);
  run_forward(params, ws, batch.size);
  return backward_pass(params, batch, ws, &grads);
}

void adam_step(MlpParams& params, const Gradients& grads, AdamState& state, double lr) {
  if (grads.weights.size() != params.weights.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  auto update = [&](std::vector<double>& p, const std::vector<double>& g,
                    std::vector<double>& m, std::vector<double>& v) {
    if (g.size() != p.size()) throw std::invalid_argument("adam_step: shape mismatch");
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], grads.weights[l], state.m_weights[l], state.v_weights[l]);
    update(params.biases[l], grads.biases[l], state.m_biases[l], state.v_biases[l]);
  }
}

std::pair<MlpParams, TrainReport> train(const Dataset& train_set,
                                        const NetArchitecture& arch,
                                        const TrainConfig& cfg) {
  if (train_set.rows == 0) throw std::invalid_argument("train: empty dataset");
  if (static_cast<int>(train_set.cols) != arch.data_dim) {
    throw std::invalid_argument("train: dataset width does not match architecture");
  }
  const auto t_start = std::chrono::steady_clock::now();
  const int d = arch.data_dim;
  const std::size_t n = train_set.rows;
  const std::size_t batch_size = static_cast<std::size_t>(cfg.batch_size);

  RandomStream init_rng = RandomStream::derive(cfg.seed, StreamPurpose::kNetInit);
  MlpParams params = init_params(arch, init_rng);
  AdamState adam = AdamState::for_params(params);
  Gradients grads = Gradients::for_params(params);
  RandomStream loop_rng = RandomStream::derive(cfg.seed, StreamPurpose::kTrainLoop);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  FlowBatch batch;
  batch.dim = d;

  TrainReport report;
  report.epoch_mean_loss.reserve(cfg.epochs);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates shuffle from the training stream.
    for (std::size_t i = n - 1; i > 0; --i) {
      const std::size_t j = loop_rng.next_u64() % (i + 1);
      std::swap(order[i], order[j]);
    }
    double epoch_loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch_size) {
      const std::size_t m = std::min(batch_size, n - start);
      batch.size = m;
      batch.x0.resize(m * d);
      batch.x1.resize(m * d);
      batch.t.resize(m);
      for (std::size_t r = 0; r < m; ++r) {
        const double* src = train_set.row(order[start + r]);
        std::memcpy(batch.x1.data() + r * d, src, sizeof(double) * d);
        double* x0 = batch.x0.data() + r * d;
        for (int i = 0; i < d; ++i) x0[i] = loop_rng.normal();
        batch.t[r] = loop_rng.uniform();
      }
      const double loss = loss_and_gradients(params, batch, grads);
      adam_step(params, grads, adam, cfg.learning_rate);
      epoch_loss_sum += loss * static_cast<double>(m);
    }
    report.epoch_mean_loss.push_back(epoch_loss_sum / static_cast<double>(n));
  }

  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  report.params_digest = params.digest();
  return {std::move(params), std::move(report)};
}

namespace {

constexpr char kNetMagic[4] = {'R', 'F', 'N', '1'};
constexpr std::uint32_t kNetVersion = 1;

nlohmann::json meta_to_json(const CheckpointMeta& meta) {
  nlohmann::json j{
      {"architecture",
       {{"data_dim", meta.arch.data_dim}, {"hidden_dims", meta.arch.hidden_dims}}},
      {"train_config",
       {{"learning_rate", meta.train_config.learning_rate},
        {"batch_size", meta.train_config.batch_size},
        {"epochs", meta.train_config.epochs},
        {"seed", meta.train_config.seed}}},
      {"final_epoch_loss", meta.final_epoch_loss},
      {"epoch_loss_digest", meta.epoch_loss_digest},
      {"epochs_trained", meta.epochs_trained},
  };
  if (meta.threshold) {
    j["threshold"] = {{"lambda", meta.threshold->lambda},
                      {"pfa_target", meta.threshold->pfa_target},
                      {"calibration_size", meta.threshold->calibration_size},
                      {"scenario_digest", meta.threshold->scenario_digest}};
  }
  return j;
}

CheckpointMeta meta_from_json(const nlohmann::json& j) {
  CheckpointMeta meta;
  meta.arch.data_dim = j.at("architecture").at("data_dim").get<int>();
  meta.arch.hidden_dims = j.at("architecture").at("hidden_dims").get<std::vector<int>>();
  meta.train_config.learning_rate = j.at("train_config").at("learning_rate").get<double>();
  meta.train_config.batch_size = j.at("train_config").at("batch_size").get<int>();
  meta.train_config.epochs = j.at("train_config").at("epochs").get<int>();
  meta.train_config.seed = j.at("train_config").at("seed").get<std::uint64_t>();
  meta.final_epoch_loss = j.at("final_epoch_loss").get<double>();
  meta.epoch_loss_digest = j.at("epoch_loss_digest").get<std::uint64_t>();
  meta.epochs_trained = j.at("epochs_trained").get<int>();
  if (j.contains("threshold")) {
    EmbeddedThreshold thr;
    thr.lambda = j.at("threshold").at("lambda").get<double>();
    thr.pfa_target = j.at("threshold").at("pfa_target").get<double>();
    thr.calibration_size = j.at("threshold").at("calibration_size").get<std::uint64_t>();
    thr.scenario_digest = j.at("threshold").at("scenario_digest").get<std::uint64_t>();
    meta.threshold = thr;
  }
  return meta;
}

}  // namespace

void save_checkpoint(const MlpParams& params, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  if (params.arch != meta.arch) {
    throw std::invalid_argument("save_checkpoint: meta architecture mismatch");
  }
  const std::string header = meta_to_json(meta).dump();
  std::string payload;
  payload.reserve(params.parameter_count() * sizeof(double));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    payload.append(reinterpret_cast<const char*>(params.weights[l].data()),
                   params.weights[l].size() * sizeof(double));
    payload.append(reinterpret_cast<const char*>(params.biases[l].data()),
                   params.biases[l].size() * sizeof(double));
  }
  std::string out;
  out.append(kNetMagic, 4);
  put<std::uint32_t>(out, kNetVersion);
  put<std::uint64_t>(out, header.size());
  out += header;
  out += payload;
  put<std::uint64_t>(out, fnv1a64(payload.data(), payload.size()));

  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kNetMagic, 4) != 0) {
    throw std::runtime_error("bad magic in checkpoint " + path.string());
  }
  const auto version = take<std::uint32_t>(in);
  if (version != kNetVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = take<std::uint64_t>(in);
  std::string header(header_len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("truncated checkpoint header");

  Checkpoint ckpt;
  ckpt.meta = meta_from_json(nlohmann::json::parse(header));
  ckpt.params = MlpParams::zeros(ckpt.meta.arch);

  std::string payload(ckpt.params.parameter_count() * sizeof(double), '\0');
  in.read(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!in) throw std::runtime_error("truncated checkpoint payload");
  const auto stored_sum = take<std::uint64_t>(in);
  if (stored_sum != fnv1a64(payload.data(), payload.size())) {
    throw std::runtime_error("checkpoint payload checksum mismatch");
  }
  std::size_t off = 0;
  for (std::size_t l = 0; l < ckpt.params.weights.size(); ++l) {
    std::memcpy(ckpt.params.weights[l].data(), payload.data() + off,
                ckpt.params.weights[l].size() * sizeof(double));
    off += ckpt.params.weights[l].size() * sizeof(double);
    std::memcpy(ckpt.params.biases[l].data(), payload.data() + off,
                ckpt.params.biases[l].size() * sizeof(double));
    off += ckpt.params.biases[l].size() * sizeof(double);
  }
  return ckpt;
}

void embed_threshold(const std::filesystem::path& path, const EmbeddedThreshold& thr) {
  Checkpoint ckpt = load_checkpoint(path);
  ckpt.meta.threshold = thr;
  save_checkpoint(ckpt.params, ckpt.meta, path);
}

}  // namespace rfmdet
