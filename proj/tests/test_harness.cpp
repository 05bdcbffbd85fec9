#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rfmdet/harness.hpp"

using namespace rfmdet;

namespace {

ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.seed = 9001;
  return cfg;
}

}  // namespace

TEST_CASE("detector names round trip") {
  for (DetectorKind k : {DetectorKind::kMf, DetectorKind::kNmf, DetectorKind::kAmfScm,
                         DetectorKind::kAnmfScm, DetectorKind::kAnmfFp,
                         DetectorKind::kDrfm}) {
    CHECK(detector_from_name(detector_name(k)) == k);
  }
  CHECK_FALSE(detector_from_name("SVDD").has_value());
}

TEST_CASE("calibration lands near the analytic thresholds") {
  const ScenarioConfig cfg = default_scenario();
  const ScenarioSampler sampler(cfg);
  DetectorSuite suite;
  suite.push_back(make_mf_handle(sampler, 0.0));
  suite.push_back(make_nmf_handle(sampler, 0.0));
  const std::vector<Observation> h0 =
      make_h0_observations(sampler, 10000, StreamPurpose::kCalibration);

  SUBCASE("pfa 0.01 brackets the Exp(1) and Beta tails") {
    const std::vector<Threshold> thr = calibrate_all(suite, h0, 0.01, cfg.seed);
    REQUIRE(thr.size() == 2);
    CHECK(thr[0].lambda > 4.1);   // analytic 4.605
    CHECK(thr[0].lambda < 5.1);
    CHECK(thr[1].lambda > 0.24);  // analytic 0.2644
    CHECK(thr[1].lambda < 0.29);
    CHECK(thr[0].calibration_size == 10000);
  }
  SUBCASE("pfa 0.5 lands near the H0 medians") {
    const std::vector<Threshold> thr = calibrate_all(suite, h0, 0.5, cfg.seed);
    CHECK(thr[0].lambda > 0.6);  // Exp(1) median ln 2
    CHECK(thr[0].lambda < 0.8);
    const double nmf_median = 1.0 - std::pow(0.5, 1.0 / 15.0);
    CHECK(std::abs(thr[1].lambda - nmf_median) < 0.01);
  }
  SUBCASE("empty validation set rejected") {
    CHECK_THROWS_AS(calibrate_all(suite, {}, 0.01, cfg.seed), std::invalid_argument);
  }
}

TEST_CASE("measure_pfa edges") {
  const ScenarioConfig cfg = default_scenario();
  const ScenarioSampler sampler(cfg);
  const auto handle = make_mf_handle(sampler, 0.0);
  const std::vector<Observation> h0 =
      make_h0_observations(sampler, 500, StreamPurpose::kPfaTest);
  Threshold thr;
  thr.lambda = 1e300;
  CHECK(measure_pfa(*handle, thr, h0, cfg.seed) == 0.0);
  thr.lambda = -1.0;
  CHECK(measure_pfa(*handle, thr, h0, cfg.seed) == 1.0);
}

TEST_CASE("pd_sweep behavior") {
  const ScenarioConfig cfg = default_scenario();
  const ScenarioSampler sampler(cfg);
  const auto handle = make_mf_handle(sampler, 0.0);
  Threshold thr;
  thr.lambda = mf_threshold_analytic(0.01);
  thr.pfa_target = 0.01;
  const std::vector<double> grid{-20.0, 0.0, 10.0, 19.0};

  const PdCurve curve = pd_sweep(*handle, thr, grid, 0.0, 400, sampler);
  REQUIRE(curve.pd.size() == 4);
  SUBCASE("endpoint ordering and plausible levels") {
    CHECK(curve.pd.front() < 0.05);
    CHECK(curve.pd.back() > curve.pd.front());
    CHECK(curve.pd.back() > 0.95);
    for (double hw : curve.ci95_halfwidth) {
      CHECK(hw > 0.0);
      CHECK(hw < 0.06);
    }
  }
  SUBCASE("deterministic across repeat runs") {
    const PdCurve again = pd_sweep(*handle, thr, grid, 0.0, 400, sampler);
    CHECK(again.pd == curve.pd);
  }
  SUBCASE("parallel and sequential execution agree exactly") {
    const PdCurve par = pd_sweep(*handle, thr, grid, 0.0, 400, sampler, 4);
    CHECK(par.pd == curve.pd);
  }
  SUBCASE("adaptive handle draws are trial-keyed and deterministic in parallel") {
    const auto amf = make_amf_scm_handle(sampler, 0.0);
    const PdCurve seq = pd_sweep(*amf, thr, std::vector<double>{10.0}, 0.0, 200, sampler, 1);
    const PdCurve par = pd_sweep(*amf, thr, std::vector<double>{10.0}, 0.0, 200, sampler, 4);
    CHECK(seq.pd == par.pd);
  }
}

TEST_CASE("doppler map consistency with pd_sweep") {
  const ScenarioConfig cfg = default_scenario();
  const ScenarioSampler sampler(cfg);
  const auto handle = make_nmf_handle(sampler, 0.0);
  Threshold thr;
  thr.lambda = nmf_threshold_analytic(0.01, cfg.n_pulses);
  const std::vector<double> grid{5.0, 15.0};
  const DopplerMap map = doppler_map(*handle, thr, grid, 150, sampler);
  CHECK(map.n_bins == 16);
  REQUIRE(map.pd.size() == 32);
  for (double v : map.pd) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  // Row d = 0 reproduces a standalone sweep at d = 0 exactly (same streams).
  const PdCurve row0 = pd_sweep(*handle, thr, grid, 0.0, 150, sampler);
  CHECK(map.at(0, 0) == row0.pd[0]);
  CHECK(map.at(0, 1) == row0.pd[1]);
}

TEST_CASE("bench formula identity and modes") {
  const ScenarioConfig cfg = default_scenario();
  const ScenarioSampler sampler(cfg);
  DetectorSuite suite;
  suite.push_back(make_mf_handle(sampler, 0.0));
  suite.push_back(make_amf_scm_handle(sampler, 0.0));
  std::vector<Threshold> thresholds(2);
  thresholds[0].lambda = 4.6;
  thresholds[1].lambda = 20.0;
  BenchOptions opts;
  opts.samples_per_snr = 40;
  opts.snr_min_db = 0.0;
  opts.snr_max_db = 4.0;  // 5 SNR points
  const BenchResult result = bench(suite, thresholds, sampler, opts);

  REQUIRE(result.entries.size() == 3);  // MF stateless + AMF amortized + per-sample
  CHECK(result.entries[0].mode == "stateless");
  CHECK(result.entries[1].mode == "amortized");
  CHECK(result.entries[2].mode == "per-sample");
  for (const BenchEntry& e : result.entries) {
    CHECK(e.mean_ms > 0.0);
    CHECK(e.samples_per_snr == 40);
    CHECK(e.snr_points == 5);
  }
  // estimation dominates the per-sample mode for the adaptive detector
  CHECK(result.entries[2].mean_ms > result.entries[1].mean_ms);
  // reference column: MF and AMF-SCM carry values
  CHECK(result.entries[0].reference_ms == 0.0516);
  CHECK(result.entries[1].reference_ms == 0.0970);
}

TEST_CASE("wilson interval sanity") {
  CHECK(wilson_halfwidth(0.5, 100) == doctest::Approx(0.0963).epsilon(0.02));
  CHECK(wilson_halfwidth(0.0, 1000) < wilson_halfwidth(0.5, 1000));
  CHECK(wilson_halfwidth(0.5, 10000) < wilson_halfwidth(0.5, 100));
}

TEST_CASE("csv export and parsing") {
  const auto dir = std::filesystem::temp_directory_path() / "rfmdet_test_csv";
  std::filesystem::create_directories(dir);

  PdCurve curve;
  curve.detector = DetectorKind::kAnmfFp;
  curve.scenario = "cCGN+AWGN";
  curve.doppler_bin = 3.0;
  curve.trials_per_point = 123;
  for (int i = 0; i < 40; ++i) {
    curve.snr_grid_db.push_back(-20.0 + i);
    curve.pd.push_back(0.01 + 0.024 * i);
    curve.ci95_halfwidth.push_back(0.003 + 1e-4 * i);
  }
  const std::vector<PdCurve> curves{curve};

  SUBCASE("row count and round trip") {
    const auto path = dir / "pd_curve.csv";
    write_pd_curves_csv(curves, path);
    std::ifstream in(path);
    std::string line;
    std::size_t rows = 0;
    std::getline(in, line);
    CHECK(line == "detector,scenario,doppler_bin,snr_db,pd,trials,ci95_halfwidth");
    while (std::getline(in, line)) rows += line.empty() ? 0 : 1;
    CHECK(rows == 40);

    const std::vector<PdCurve> back = read_pd_curves_csv(path);
    REQUIRE(back.size() == 1);
    CHECK(back[0].detector == curve.detector);
    CHECK(back[0].scenario == curve.scenario);
    CHECK(back[0].doppler_bin == curve.doppler_bin);
    CHECK(back[0].trials_per_point == curve.trials_per_point);
    CHECK(back[0].snr_grid_db == curve.snr_grid_db);
    CHECK(back[0].pd == curve.pd);
    CHECK(back[0].ci95_halfwidth == curve.ci95_halfwidth);
  }
  SUBCASE("re-export is byte identical") {
    const auto p1 = dir / "a.csv";
    const auto p2 = dir / "b.csv";
    write_pd_curves_csv(curves, p1);
    write_pd_curves_csv(curves, p2);
    std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {});
    const std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
  }
  SUBCASE("svg output is produced and deterministic") {
    const auto p1 = dir / "a.svg";
    const auto p2 = dir / "b.svg";
    write_pd_curves_svg(curves, p1);
    write_pd_curves_svg(curves, p2);
    std::ifstream a(p1, std::ios::binary), b(p2, std::ios::binary);
    const std::string sa((std::istreambuf_iterator<char>(a)), {});
    const std::string sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
    CHECK(sa.find("<svg") != std::string::npos);
    CHECK(sa.find("polyline") != std::string::npos);
  }
  SUBCASE("doppler and bench csv headers") {
    DopplerMap map;
    map.detector = DetectorKind::kDrfm;
    map.scenario = "cGN+AWGN";
    map.n_bins = 2;
    map.snr_grid_db = {10.0, 16.0};
    map.pd = {0.1, 0.9, 0.2, 0.95};
    const auto dpath = dir / "doppler.csv";
    write_doppler_maps_csv(std::vector<DopplerMap>{map}, dpath);
    std::ifstream din(dpath);
    std::string line;
    std::getline(din, line);
    CHECK(line == "detector,scenario,doppler_bin,snr_db,pd");

    BenchResult bench_result;
    BenchEntry e;
    e.detector = DetectorKind::kAnmfScm;
    e.mode = "per-sample";
    e.mean_ms = 0.5;
    e.samples_per_snr = 1000;
    e.snr_points = 21;
    bench_result.entries.push_back(e);
    const auto bpath = dir / "bench.csv";
    write_bench_csv(bench_result, bpath);
    std::ifstream bin(bpath);
    std::getline(bin, line);
    CHECK(line == "detector,mode,mean_ms,samples_per_snr,snr_points,reference_ms_from_paper");
    std::getline(bin, line);
    CHECK(line.find("ANMF-SCM,per-sample,0.5,1000,21,") == 0);
    CHECK(line.back() == ',');  // no reference value for ANMF-SCM
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("drfm handle scores batches identically to single calls") {
  NetArchitecture arch;  // D = 32
  RandomStream rng(64);
  const MlpParams params = init_params(arch, rng);
  IntegrationConfig icfg;
  icfg.steps = 8;
  const auto handle = make_drfm_handle(params, icfg);
  const ScenarioConfig cfg = default_scenario();
  const ScenarioSampler sampler(cfg);
  std::vector<Observation> obs = make_h0_observations(sampler, 20, StreamPurpose::kGeneric);
  std::vector<RandomStream> rngs(20);
  std::vector<double> batch_scores(20);
  handle->score(obs, rngs, batch_scores);
  for (int i = 0; i < 20; ++i) {
    RandomStream unused;
    CHECK(batch_scores[i] == handle->score_one(obs[i], unused));
  }
}
