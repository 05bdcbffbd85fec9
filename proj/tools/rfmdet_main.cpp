// rfmdet: radar detection pipeline driver.
//
// Subcommands mirror the experiment stages so expensive stages are cached on
// disk: generate -> train -> calibrate -> evaluate / doppler / bench.
//
// Exit codes: 2 config validation, 3 I/O failure, 4 missing inputs,
// 5 dimension mismatch, 6 Tyler fixed point did not converge.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "rfmdet/dataset_io.hpp"
#include "rfmdet/harness.hpp"

namespace {

using nlohmann::json;
using namespace rfmdet;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitMissing = 4;
constexpr int kExitDimension = 5;
constexpr int kExitNotConverged = 6;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class MissingInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EvaluationConfig {
  double snr_min_db = -20.0;
  double snr_max_db = 19.0;
  std::size_t trials = 5000;
  double pfa = 0.01;
  double doppler_bin = 0.0;
  std::size_t secondary_count = 0;  // 0 -> K = 2N
  bool resample_secondary_per_trial = true;
  std::size_t bench_samples = 1000;
  int threads = 0;  // 0 -> hardware concurrency
};

struct PathsConfig {
  std::string data_dir = "data";
  std::string checkpoint_dir = "checkpoints";
  std::string out_dir = "out";
};

struct RunConfig {
  ScenarioConfig scenario{};
  TrainConfig train{};
  NetArchitecture arch{};
  IntegrationConfig integration{};
  SplitCounts splits{};
  EvaluationConfig evaluation{};
  PathsConfig paths{};
};

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw ConfigError("unknown key \"" + key + "\" in " + where);
    }
  }
}

RunConfig load_config(const std::string& path) {
  RunConfig cfg;
  cfg.train.seed = cfg.scenario.seed + 1;
  if (path.empty()) {
    cfg.arch.data_dim = cfg.scenario.data_dim();
    return cfg;
  }

  std::ifstream in(path);
  if (!in) throw MissingInput("config file not found: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  reject_unknown_keys(j, {"scenario", "train", "arch", "integration", "splits",
                          "evaluation", "paths"},
                      "config root");

  if (j.contains("scenario")) {
    const json& s = j["scenario"];
    reject_unknown_keys(s, {"n_pulses", "rho", "clutter", "mu", "cnr", "snr_mode", "seed"},
                        "scenario");
    cfg.scenario.n_pulses = s.value("n_pulses", cfg.scenario.n_pulses);
    cfg.scenario.rho = s.value("rho", cfg.scenario.rho);
    const std::string kind = s.value("clutter", std::string("gaussian"));
    const double mu = s.value("mu", 1.0);
    if (kind == "compound") {
      cfg.scenario.clutter = ClutterKind::compound_gaussian(mu);
    } else if (kind == "gaussian") {
      cfg.scenario.clutter = ClutterKind::gaussian();
    } else {
      throw ConfigError("scenario.clutter must be \"gaussian\" or \"compound\"");
    }
    cfg.scenario.cnr = s.value("cnr", cfg.scenario.cnr);
    const std::string mode = s.value("snr_mode", std::string("whitened"));
    if (mode == "whitened") {
      cfg.scenario.snr_mode = SnrMode::kWhitened;
    } else if (mode == "literal") {
      cfg.scenario.snr_mode = SnrMode::kLiteralPaper;
    } else {
      throw ConfigError("scenario.snr_mode must be \"whitened\" or \"literal\"");
    }
    cfg.scenario.seed = s.value("seed", cfg.scenario.seed);
    cfg.train.seed = cfg.scenario.seed + 1;
    if (cfg.scenario.n_pulses < 2) throw ConfigError("scenario.n_pulses must be >= 2");
    if (!(cfg.scenario.rho >= 0.0 && cfg.scenario.rho < 1.0)) {
      throw ConfigError("scenario.rho must lie in [0, 1)");
    }
    if (!(cfg.scenario.cnr > 0.0)) throw ConfigError("scenario.cnr must be positive");
  }
  if (j.contains("train")) {
    const json& t = j["train"];
    reject_unknown_keys(t, {"learning_rate", "batch_size", "epochs", "seed"}, "train");
    cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
    cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
    cfg.train.epochs = t.value("epochs", cfg.train.epochs);
    cfg.train.seed = t.value("seed", cfg.train.seed);
    if (cfg.train.learning_rate <= 0 || cfg.train.batch_size <= 0 || cfg.train.epochs <= 0) {
      throw ConfigError("train values must be positive");
    }
  }
  if (j.contains("arch")) {
    reject_unknown_keys(j["arch"], {"hidden_dims"}, "arch");
    cfg.arch.hidden_dims = j["arch"].value("hidden_dims", cfg.arch.hidden_dims);
    if (cfg.arch.hidden_dims.empty()) throw ConfigError("arch.hidden_dims must be nonempty");
    for (int h : cfg.arch.hidden_dims) {
      if (h <= 0) throw ConfigError("arch.hidden_dims must be positive");
    }
  }
  if (j.contains("integration")) {
    reject_unknown_keys(j["integration"], {"steps"}, "integration");
    cfg.integration.steps = j["integration"].value("steps", cfg.integration.steps);
    if (cfg.integration.steps < 1) throw ConfigError("integration.steps must be >= 1");
  }
  if (j.contains("splits")) {
    const json& s = j["splits"];
    reject_unknown_keys(s, {"train", "validation", "test"}, "splits");
    cfg.splits.train = s.value("train", cfg.splits.train);
    cfg.splits.validation = s.value("validation", cfg.splits.validation);
    cfg.splits.test = s.value("test", cfg.splits.test);
    if (cfg.splits.train == 0 || cfg.splits.validation == 0 || cfg.splits.test == 0) {
      throw ConfigError("splits must be positive");
    }
  }
  if (j.contains("evaluation")) {
    const json& e = j["evaluation"];
    reject_unknown_keys(e,
                        {"snr_min_db", "snr_max_db", "trials", "pfa", "doppler_bin",
                         "secondary_count", "resample_secondary_per_trial",
                         "bench_samples", "threads"},
                        "evaluation");
    cfg.evaluation.snr_min_db = e.value("snr_min_db", cfg.evaluation.snr_min_db);
    cfg.evaluation.snr_max_db = e.value("snr_max_db", cfg.evaluation.snr_max_db);
    cfg.evaluation.trials = e.value("trials", cfg.evaluation.trials);
    cfg.evaluation.pfa = e.value("pfa", cfg.evaluation.pfa);
    cfg.evaluation.doppler_bin = e.value("doppler_bin", cfg.evaluation.doppler_bin);
    cfg.evaluation.secondary_count = e.value("secondary_count", cfg.evaluation.secondary_count);
    cfg.evaluation.resample_secondary_per_trial =
        e.value("resample_secondary_per_trial", cfg.evaluation.resample_secondary_per_trial);
    cfg.evaluation.bench_samples = e.value("bench_samples", cfg.evaluation.bench_samples);
    cfg.evaluation.threads = e.value("threads", cfg.evaluation.threads);
    if (!(cfg.evaluation.pfa > 0.0 && cfg.evaluation.pfa < 1.0)) {
      throw ConfigError("evaluation.pfa must lie in (0, 1)");
    }
    if (cfg.evaluation.trials == 0) throw ConfigError("evaluation.trials must be positive");
  }
  if (j.contains("paths")) {
    const json& p = j["paths"];
    reject_unknown_keys(p, {"data_dir", "checkpoint_dir", "out_dir"}, "paths");
    cfg.paths.data_dir = p.value("data_dir", cfg.paths.data_dir);
    cfg.paths.checkpoint_dir = p.value("checkpoint_dir", cfg.paths.checkpoint_dir);
    cfg.paths.out_dir = p.value("out_dir", cfg.paths.out_dir);
  }
  cfg.arch.data_dim = cfg.scenario.data_dim();
  return cfg;
}

struct CliOverrides {
  std::string config_path;
  std::string scenario;   // "gaussian" | "compound"
  std::string detectors;  // comma list
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<double> snr_min, snr_max;
  std::optional<std::size_t> trials;
  std::optional<int> steps;
  std::optional<int> epochs;
  std::optional<int> threads;
};

RunConfig resolve_config(const CliOverrides& ov) {
  RunConfig cfg = load_config(ov.config_path);
  if (!ov.scenario.empty()) {
    if (ov.scenario == "compound") {
      cfg.scenario.clutter =
          ClutterKind::compound_gaussian(cfg.scenario.clutter.texture_shape);
    } else if (ov.scenario == "gaussian") {
      cfg.scenario.clutter = ClutterKind::gaussian();
    } else {
      throw ConfigError("--scenario must be gaussian or compound");
    }
  }
  if (ov.seed) {
    cfg.scenario.seed = *ov.seed;
    cfg.train.seed = *ov.seed + 1;
  }
  if (ov.snr_min) cfg.evaluation.snr_min_db = *ov.snr_min;
  if (ov.snr_max) cfg.evaluation.snr_max_db = *ov.snr_max;
  if (ov.trials) cfg.evaluation.trials = *ov.trials;
  if (ov.steps) cfg.integration.steps = *ov.steps;
  if (ov.epochs) cfg.train.epochs = *ov.epochs;
  if (ov.threads) cfg.evaluation.threads = *ov.threads;
  if (!ov.out_dir.empty()) cfg.paths.out_dir = ov.out_dir;
  if (const char* env = std::getenv("RFM_RADAR_OUT"); env != nullptr && *env != '\0') {
    cfg.paths.out_dir = env;
  }
  cfg.arch.data_dim = cfg.scenario.data_dim();
  return cfg;
}

int effective_threads(const RunConfig& cfg) {
  if (cfg.evaluation.threads > 0) return cfg.evaluation.threads;
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

std::filesystem::path dataset_path(const RunConfig& cfg, Split split) {
  return std::filesystem::path(cfg.paths.data_dir) / (split_name(split) + ".rfd");
}

std::filesystem::path checkpoint_path(const RunConfig& cfg) {
  return std::filesystem::path(cfg.paths.checkpoint_dir) /
         (cfg.scenario.clutter.compound ? "drfm_compound.rfn" : "drfm_gaussian.rfn");
}

std::filesystem::path thresholds_path(const RunConfig& cfg) {
  return std::filesystem::path(cfg.paths.out_dir) / "thresholds.csv";
}

Dataset load_required_dataset(const RunConfig& cfg, Split split) {
  const auto path = dataset_path(cfg, split);
  if (!std::filesystem::exists(path)) {
    throw MissingInput("dataset not found: " + path.string() + " (run generate first)");
  }
  return read_dataset(path);
}

std::vector<DetectorKind> selected_detectors(const std::string& spec) {
  std::vector<DetectorKind> kinds = {DetectorKind::kMf,     DetectorKind::kNmf,
                                     DetectorKind::kAmfScm, DetectorKind::kAnmfScm,
                                     DetectorKind::kAnmfFp, DetectorKind::kDrfm};
  if (spec.empty()) return kinds;
  std::vector<DetectorKind> out;
  std::stringstream ss(spec);
  std::string name;
  while (std::getline(ss, name, ',')) {
    const auto kind = detector_from_name(name);
    if (!kind) throw ConfigError("unknown detector \"" + name + "\" in --detectors");
    out.push_back(*kind);
  }
  if (out.empty()) throw ConfigError("--detectors selected nothing");
  return out;
}

struct LoadedThreshold {
  DetectorKind kind;
  Threshold threshold;
};

std::vector<LoadedThreshold> load_thresholds(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw MissingInput("thresholds not found: " + path.string() + " (run calibrate first)");
  }
  std::string line;
  std::getline(in, line);  // header
  std::vector<LoadedThreshold> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string name, lambda, pfa, size, source;
    std::getline(ss, name, ',');
    std::getline(ss, lambda, ',');
    std::getline(ss, pfa, ',');
    std::getline(ss, size, ',');
    std::getline(ss, source, ',');
    const auto kind = detector_from_name(name);
    if (!kind) throw ConfigError("unknown detector in thresholds.csv: " + name);
    Threshold t;
    t.lambda = std::stod(lambda);
    t.pfa_target = std::stod(pfa);
    t.calibration_size = std::stoull(size);
    t.source = source == "analytic" ? ThresholdSource::kAnalytic
                                    : ThresholdSource::kEmpiricalQuantile;
    out.push_back({*kind, t});
  }
  return out;
}

struct CalibratedSuite {
  DetectorSuite suite;
  std::vector<Threshold> thresholds;
};

CalibratedSuite build_calibrated(const RunConfig& cfg,
                                 const std::vector<DetectorKind>& kinds) {
  const ScenarioSampler sampler(cfg.scenario);
  const auto stored = load_thresholds(thresholds_path(cfg));
  AdaptiveOptions adaptive;
  adaptive.secondary_count = cfg.evaluation.secondary_count;
  adaptive.resample_per_trial = cfg.evaluation.resample_secondary_per_trial;

  CalibratedSuite out;
  for (DetectorKind kind : kinds) {
    std::unique_ptr<DetectorHandle> handle;
    switch (kind) {
      case DetectorKind::kMf:
        handle = make_mf_handle(sampler, cfg.evaluation.doppler_bin);
        break;
      case DetectorKind::kNmf:
        handle = make_nmf_handle(sampler, cfg.evaluation.doppler_bin);
        break;
      case DetectorKind::kAmfScm:
        handle = make_amf_scm_handle(sampler, cfg.evaluation.doppler_bin, adaptive);
        break;
      case DetectorKind::kAnmfScm:
        handle = make_anmf_scm_handle(sampler, cfg.evaluation.doppler_bin, adaptive);
        break;
      case DetectorKind::kAnmfFp:
        handle = make_anmf_fp_handle(sampler, cfg.evaluation.doppler_bin, adaptive);
        break;
      case DetectorKind::kDrfm: {
        const auto ckpt_path = checkpoint_path(cfg);
        if (!std::filesystem::exists(ckpt_path)) {
          throw MissingInput("checkpoint not found: " + ckpt_path.string() +
                             " (run train + calibrate first)");
        }
        Checkpoint ckpt = load_checkpoint(ckpt_path);
        if (ckpt.meta.arch.data_dim != cfg.scenario.data_dim()) {
          throw std::invalid_argument("checkpoint dimension does not match scenario");
        }
        if (ckpt.meta.threshold &&
            ckpt.meta.threshold->scenario_digest != cfg.scenario.digest()) {
          std::cerr << "warning: checkpoint was calibrated under a different scenario\n";
        }
        handle = make_drfm_handle(std::move(ckpt.params), cfg.integration);
        break;
      }
    }
    const auto it = std::find_if(stored.begin(), stored.end(),
                                 [&](const LoadedThreshold& t) { return t.kind == kind; });
    if (it == stored.end()) {
      throw MissingInput(std::string("no calibrated threshold for ") +
                         std::string(detector_name(kind)) + " (run calibrate first)");
    }
    out.suite.push_back(std::move(handle));
    out.thresholds.push_back(it->threshold);
  }
  return out;
}

int cmd_generate(const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.paths.data_dir);
  const DataSplits splits = generate_splits(cfg.scenario, cfg.splits);
  write_dataset(splits.train, dataset_path(cfg, Split::kTrain));
  write_dataset(splits.validation, dataset_path(cfg, Split::kValidation));
  write_dataset(splits.test, dataset_path(cfg, Split::kTest));

  // Secondary data block, stored in the same container format.
  RandomStream rng = RandomStream::derive(cfg.scenario.seed, StreamPurpose::kSecondary, 0);
  const SecondaryData sd =
      sample_secondary(cfg.scenario, cfg.evaluation.secondary_count, rng);
  Dataset sec;
  sec.rows = sd.z.size();
  sec.cols = static_cast<std::size_t>(cfg.scenario.data_dim());
  sec.split = Split::kSecondary;
  sec.config = cfg.scenario;
  sec.creation_seed = cfg.scenario.seed;
  sec.x.resize(sec.rows * sec.cols);
  for (std::size_t i = 0; i < sec.rows; ++i) {
    const std::vector<double> row = embed_real(sd.z[i]);
    std::copy(row.begin(), row.end(), sec.row(i));
  }
  write_dataset(sec, dataset_path(cfg, Split::kSecondary));

  std::cout << "wrote " << splits.train.rows << "/" << splits.validation.rows << "/"
            << splits.test.rows << " train/validation/test rows and " << sec.rows
            << " secondary vectors to " << cfg.paths.data_dir << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg) {
  const Dataset train_set = load_required_dataset(cfg, Split::kTrain);
  if (static_cast<int>(train_set.cols) != cfg.arch.data_dim) {
    throw std::invalid_argument("dataset width " + std::to_string(train_set.cols) +
                                " does not match configured N");
  }
  auto [params, report] = train(train_set, cfg.arch, cfg.train);

  CheckpointMeta meta;
  meta.arch = cfg.arch;
  meta.train_config = cfg.train;
  meta.final_epoch_loss = report.epoch_mean_loss.back();
  meta.epoch_loss_digest = fnv1a64(report.epoch_mean_loss.data(),
                                   report.epoch_mean_loss.size() * sizeof(double));
  meta.epochs_trained = cfg.train.epochs;
  std::filesystem::create_directories(cfg.paths.checkpoint_dir);
  save_checkpoint(params, meta, checkpoint_path(cfg));
  std::cout << "trained " << cfg.train.epochs << " epochs in " << report.wall_seconds
            << " s; final epoch loss " << meta.final_epoch_loss << "; checkpoint "
            << checkpoint_path(cfg).string() << "\n";
  return 0;
}

int cmd_calibrate(const RunConfig& cfg) {
  const auto ckpt_path = checkpoint_path(cfg);
  if (!std::filesystem::exists(ckpt_path)) {
    throw MissingInput("checkpoint not found: " + ckpt_path.string());
  }
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  const Dataset validation = load_required_dataset(cfg, Split::kValidation);
  const std::vector<Observation> h0 = dataset_to_observations(validation);

  const ScenarioSampler sampler(cfg.scenario);
  AdaptiveOptions adaptive;
  adaptive.secondary_count = cfg.evaluation.secondary_count;
  adaptive.resample_per_trial = cfg.evaluation.resample_secondary_per_trial;
  DetectorSuite suite = make_detector_suite(sampler, cfg.evaluation.doppler_bin,
                                            &ckpt.params, cfg.integration, adaptive);
  const std::vector<Threshold> thresholds = calibrate_all(
      suite, h0, cfg.evaluation.pfa, cfg.scenario.seed, effective_threads(cfg));

  std::filesystem::create_directories(cfg.paths.out_dir);
  write_thresholds_csv(suite, thresholds, thresholds_path(cfg));

  EmbeddedThreshold embedded;
  embedded.lambda = thresholds.back().lambda;  // D-RFM is the last suite entry
  embedded.pfa_target = cfg.evaluation.pfa;
  embedded.calibration_size = h0.size();
  embedded.scenario_digest = cfg.scenario.digest();
  embed_threshold(ckpt_path, embedded);

  for (std::size_t i = 0; i < suite.size(); ++i) {
    std::cout << suite[i]->name() << " lambda " << thresholds[i].lambda << "\n";
  }
  std::cout << "thresholds written to " << thresholds_path(cfg).string() << "\n";
  return 0;
}

std::vector<double> snr_grid(const RunConfig& cfg) {
  std::vector<double> grid;
  for (double s = cfg.evaluation.snr_min_db; s <= cfg.evaluation.snr_max_db + 1e-9;
       s += 1.0) {
    grid.push_back(s);
  }
  if (grid.empty()) throw ConfigError("empty SNR grid");
  return grid;
}

int cmd_evaluate(const RunConfig& cfg, const std::string& detectors) {
  const CalibratedSuite cal = build_calibrated(cfg, selected_detectors(detectors));
  const ScenarioSampler sampler(cfg.scenario);
  const std::vector<double> grid = snr_grid(cfg);
  std::vector<PdCurve> curves;
  for (std::size_t i = 0; i < cal.suite.size(); ++i) {
    curves.push_back(pd_sweep(*cal.suite[i], cal.thresholds[i], grid,
                              cfg.evaluation.doppler_bin, cfg.evaluation.trials, sampler,
                              effective_threads(cfg)));
    std::cout << cal.suite[i]->name() << " swept\n";
  }
  std::filesystem::create_directories(cfg.paths.out_dir);
  const auto out = std::filesystem::path(cfg.paths.out_dir);
  write_pd_curves_csv(curves, out / "pd_curve.csv");
  write_pd_curves_svg(curves, out / "pd_curve.svg");
  std::cout << "wrote " << (out / "pd_curve.csv").string() << "\n";
  return 0;
}

int cmd_doppler(const RunConfig& cfg, const std::string& detectors) {
  const CalibratedSuite cal = build_calibrated(cfg, selected_detectors(detectors));
  const ScenarioSampler sampler(cfg.scenario);
  const std::vector<double> grid = snr_grid(cfg);
  std::vector<DopplerMap> maps;
  for (std::size_t i = 0; i < cal.suite.size(); ++i) {
    maps.push_back(doppler_map(*cal.suite[i], cal.thresholds[i], grid,
                               cfg.evaluation.trials, sampler, effective_threads(cfg)));
    std::cout << cal.suite[i]->name() << " mapped\n";
  }
  std::filesystem::create_directories(cfg.paths.out_dir);
  const auto out = std::filesystem::path(cfg.paths.out_dir);
  write_doppler_maps_csv(maps, out / "doppler_map.csv");
  for (const DopplerMap& m : maps) {
    std::string name = "doppler_map_" + std::string(detector_name(m.detector)) + ".svg";
    write_doppler_map_svg(m, out / name);
  }
  std::cout << "wrote " << (out / "doppler_map.csv").string() << "\n";
  return 0;
}

int cmd_bench(const RunConfig& cfg, const std::string& detectors) {
  const CalibratedSuite cal = build_calibrated(cfg, selected_detectors(detectors));
  const ScenarioSampler sampler(cfg.scenario);
  BenchOptions opts;
  opts.samples_per_snr = cfg.evaluation.bench_samples;
  opts.doppler_bin = cfg.evaluation.doppler_bin;
  const BenchResult result = bench(cal.suite, cal.thresholds, sampler, opts);
  std::filesystem::create_directories(cfg.paths.out_dir);
  const auto out = std::filesystem::path(cfg.paths.out_dir) / "bench.csv";
  write_bench_csv(result, out);
  for (const BenchEntry& e : result.entries) {
    std::cout << detector_name(e.detector) << " [" << e.mode << "] " << e.mean_ms
              << " ms/sample\n";
  }
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Radar detection pipeline: synthetic clutter scenarios, classical "
               "detectors, learned flow detector, Monte Carlo evaluation"};
  app.require_subcommand(1);

  CliOverrides ov;
  std::string detectors;

  auto add_common = [&](CLI::App* sub, bool with_eval_flags) {
    sub->add_option("--config", ov.config_path,
                    "JSON config path; every key is optional and defaults to the "
                    "standard pipeline (N=16, rho=0.5, mu=1, cnr=1, Pfa=1e-2, "
                    "splits 10000/10000/5000, lr=1e-3, batch=128, epochs=170, "
                    "hidden [256,256], steps=64)");
    sub->add_option("--seed", ov.seed, "master scenario seed (default 24301)");
    sub->add_option("--scenario", ov.scenario,
                    "clutter family: gaussian | compound (default gaussian)");
    sub->add_option("--out", ov.out_dir,
                    "output directory (default out; env RFM_RADAR_OUT overrides)");
    sub->add_option("--threads", ov.threads,
                    "worker cap for sweeps (default: machine parallelism; bench always 1)");
    if (with_eval_flags) {
      sub->add_option("--snr-min", ov.snr_min, "sweep grid lower edge in dB (default -20)");
      sub->add_option("--snr-max", ov.snr_max, "sweep grid upper edge in dB (default 19)");
      sub->add_option("--trials", ov.trials, "Monte Carlo trials per grid point (default 5000)");
      sub->add_option("--steps", ov.steps, "Euler integration steps (default 64)");
      sub->add_option("--detectors", detectors,
                      "comma list from MF,NMF,AMF-SCM,ANMF-SCM,ANMF-FP,D-RFM (default all)");
    }
  };

  CLI::App* generate = app.add_subcommand(
      "generate",
      "Write train/validation/test datasets (default 10000/10000/5000 H0 rows) and "
      "the K=2N secondary block");
  add_common(generate, false);

  CLI::App* train_cmd = app.add_subcommand(
      "train", "Train the flow network and write the checkpoint");
  add_common(train_cmd, false);
  train_cmd->add_option("--epochs", ov.epochs, "override training epochs (default 170)");

  CLI::App* calibrate = app.add_subcommand(
      "calibrate",
      "Calibrate every detector threshold on the validation split; embeds the "
      "learned detector's threshold into the checkpoint and writes thresholds.csv");
  add_common(calibrate, true);

  CLI::App* evaluate = app.add_subcommand(
      "evaluate", "Pd-vs-SNR sweep over the integer grid (default -20..19 dB, "
                  "5000 trials/point); writes pd_curve.csv and pd_curve.svg");
  add_common(evaluate, true);

  CLI::App* doppler = app.add_subcommand(
      "doppler", "Pd maps across all N Doppler bins; writes doppler_map.csv and SVGs");
  add_common(doppler, true);

  CLI::App* bench_cmd = app.add_subcommand(
      "bench", "Average per-sample detection time over 0..20 dB, 1000 samples per "
               "point, single-threaded; writes bench.csv");
  add_common(bench_cmd, true);

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = resolve_config(ov);
    if (generate->parsed()) return cmd_generate(cfg);
    if (train_cmd->parsed()) return cmd_train(cfg);
    if (calibrate->parsed()) return cmd_calibrate(cfg);
    if (evaluate->parsed()) return cmd_evaluate(cfg, detectors);
    if (doppler->parsed()) return cmd_doppler(cfg, detectors);
    if (bench_cmd->parsed()) return cmd_bench(cfg, detectors);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const MissingInput& e) {
    std::cerr << "missing input: " << e.what() << "\n";
    return kExitMissing;
  } catch (const NotConverged& e) {
    std::cerr << "tyler fixed point failed: " << e.what() << "\n";
    return kExitNotConverged;
  } catch (const std::invalid_argument& e) {
    std::cerr << "dimension error: " << e.what() << "\n";
    return kExitDimension;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
