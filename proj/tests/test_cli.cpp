#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include "rfmdet/flow_net.hpp"
#include "rfmdet/harness.hpp"

namespace {

namespace fs = std::filesystem;

const char* cli_path() { return RFMDET_CLI_PATH; }

struct CliResult {
  int exit_code;
};

CliResult run_in(const fs::path& dir, const std::string& args,
                 const std::string& env = "") {
  const std::string cmd = "cd " + dir.string() + " && " + env + " " + cli_path() + " " +
                          args + " > cli_stdout.txt 2> cli_stderr.txt";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return {WEXITSTATUS(status)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), {});
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n' ? 1 : 0;
  return n;
}

// Small-but-real pipeline configuration: full-size calibration set, tiny net.
void write_test_config(const fs::path& dir) {
  std::ofstream out(dir / "cfg.json");
  out << R"({
  "splits": {"train": 2000, "validation": 10000, "test": 2000},
  "train": {"epochs": 2},
  "arch": {"hidden_dims": [8, 8]},
  "integration": {"steps": 4},
  "evaluation": {"trials": 60, "snr_min_db": 9, "snr_max_db": 11, "threads": 1,
                 "bench_samples": 25}
})";
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("rfmdet_cli_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("cli config validation failures exit with code 2") {
  TempDir tmp;
  {
    std::ofstream out(tmp.path / "bad.json");
    out << R"({"scenario": {"n_pulses": 16, "bogus_key": 1}})";
  }
  CHECK(run_in(tmp.path, "generate --config bad.json").exit_code == 2);
  {
    std::ofstream out(tmp.path / "bad2.json");
    out << R"({"scenario": {"rho": 1.5}})";
  }
  CHECK(run_in(tmp.path, "generate --config bad2.json").exit_code == 2);
  {
    std::ofstream out(tmp.path / "bad3.json");
    out << "not json";
  }
  CHECK(run_in(tmp.path, "generate --config bad3.json").exit_code == 2);
}

TEST_CASE("cli missing inputs exit with code 4") {
  TempDir tmp;
  write_test_config(tmp.path);
  CHECK(run_in(tmp.path, "train --config cfg.json").exit_code == 4);
  CHECK(run_in(tmp.path, "evaluate --config cfg.json").exit_code == 4);
  CHECK(run_in(tmp.path, "calibrate --config cfg.json").exit_code == 4);
}

TEST_CASE("cli pipeline end to end") {
  TempDir tmp;
  write_test_config(tmp.path);

  // generate, twice: idempotent
  REQUIRE(run_in(tmp.path, "generate --config cfg.json").exit_code == 0);
  CHECK(fs::exists(tmp.path / "data/train.rfd"));
  CHECK(fs::exists(tmp.path / "data/validation.rfd.meta.json"));
  CHECK(fs::exists(tmp.path / "data/secondary.rfd"));
  const std::string train_bytes = slurp(tmp.path / "data/train.rfd");
  REQUIRE(run_in(tmp.path, "generate --config cfg.json").exit_code == 0);
  CHECK(slurp(tmp.path / "data/train.rfd") == train_bytes);

  // train; epoch override recorded in the header; deterministic re-run
  const auto ckpt = tmp.path / "checkpoints/drfm_gaussian.rfn";
  REQUIRE(run_in(tmp.path, "train --config cfg.json --epochs 1").exit_code == 0);
  REQUIRE(fs::exists(ckpt));
  CHECK(rfmdet::load_checkpoint(ckpt).meta.epochs_trained == 1);
  REQUIRE(run_in(tmp.path, "train --config cfg.json").exit_code == 0);
  CHECK(rfmdet::load_checkpoint(ckpt).meta.epochs_trained == 2);
  const std::string ckpt_bytes = slurp(ckpt);
  REQUIRE(run_in(tmp.path, "train --config cfg.json").exit_code == 0);
  CHECK(slurp(ckpt) == ckpt_bytes);

  // calibrate: six rows, MF row brackets the analytic oracle, threshold
  // embedded into the checkpoint, deterministic re-run
  REQUIRE(run_in(tmp.path, "calibrate --config cfg.json").exit_code == 0);
  const auto thresholds = tmp.path / "out/thresholds.csv";
  REQUIRE(fs::exists(thresholds));
  {
    const std::string csv = slurp(thresholds);
    CHECK(count_lines(csv) == 7);  // header + six rows
    for (const char* name : {"MF", "NMF", "AMF-SCM", "ANMF-SCM", "ANMF-FP", "D-RFM"}) {
      CHECK(csv.find(name) != std::string::npos);
    }
    std::stringstream ss(csv);
    std::string line;
    std::getline(ss, line);
    std::getline(ss, line);
    REQUIRE(line.rfind("MF,", 0) == 0);
    const double lambda = std::stod(line.substr(3));
    CHECK(lambda > 4.1);  // analytic 4.605 from 1e4 samples
    CHECK(lambda < 5.1);

    const rfmdet::Checkpoint c = rfmdet::load_checkpoint(ckpt);
    REQUIRE(c.meta.threshold.has_value());
    CHECK(c.meta.threshold->pfa_target == 0.01);
    CHECK(c.meta.threshold->calibration_size == 10000);

    REQUIRE(run_in(tmp.path, "calibrate --config cfg.json").exit_code == 0);
    CHECK(slurp(thresholds) == csv);
  }

  // evaluate: one row per detector per grid point; idempotent; subsettable
  REQUIRE(run_in(tmp.path, "evaluate --config cfg.json").exit_code == 0);
  {
    const std::string csv = slurp(tmp.path / "out/pd_curve.csv");
    CHECK(count_lines(csv) == 1 + 6 * 3);  // header + 6 detectors x 3 SNR points
    CHECK(fs::exists(tmp.path / "out/pd_curve.svg"));
    REQUIRE(run_in(tmp.path, "evaluate --config cfg.json").exit_code == 0);
    CHECK(slurp(tmp.path / "out/pd_curve.csv") == csv);
  }
  REQUIRE(run_in(tmp.path, "evaluate --config cfg.json --detectors MF,NMF").exit_code == 0);
  {
    const std::string csv = slurp(tmp.path / "out/pd_curve.csv");
    CHECK(count_lines(csv) == 1 + 2 * 3);
    CHECK(csv.find("D-RFM") == std::string::npos);
  }
  CHECK(run_in(tmp.path, "evaluate --config cfg.json --detectors NOPE").exit_code == 2);

  // doppler: all 16 bins present
  REQUIRE(run_in(tmp.path,
                 "doppler --config cfg.json --detectors MF --trials 20 "
                 "--snr-min 10 --snr-max 10")
              .exit_code == 0);
  {
    const std::string csv = slurp(tmp.path / "out/doppler_map.csv");
    CHECK(count_lines(csv) == 1 + 16);  // header + 16 bins x 1 SNR
    CHECK(fs::exists(tmp.path / "out/doppler_map_MF.svg"));
  }

  // bench: reference column carries the recorded values
  REQUIRE(run_in(tmp.path, "bench --config cfg.json --detectors MF,ANMF-FP,D-RFM")
              .exit_code == 0);
  {
    const std::string csv = slurp(tmp.path / "out/bench.csv");
    CHECK(csv.find("reference_ms_from_paper") != std::string::npos);
    CHECK(csv.find("1.9255") != std::string::npos);
    CHECK(csv.find("0.0209") != std::string::npos);
    CHECK(count_lines(csv) == 1 + 1 + 2 + 1);  // header + MF + ANMF-FP modes + D-RFM
  }

  // environment variable redirects outputs (calibrate + evaluate both write there)
  REQUIRE(run_in(tmp.path, "calibrate --config cfg.json", "RFM_RADAR_OUT=env_out")
              .exit_code == 0);
  REQUIRE(run_in(tmp.path, "evaluate --config cfg.json --detectors MF",
                 "RFM_RADAR_OUT=env_out")
              .exit_code == 0);
  CHECK(fs::exists(tmp.path / "env_out/thresholds.csv"));
  CHECK(fs::exists(tmp.path / "env_out/pd_curve.csv"));

  // dimension mismatch: N=8 config against the N=16 datasets on disk
  {
    std::ofstream out(tmp.path / "cfg8.json");
    out << R"({"scenario": {"n_pulses": 8},
  "splits": {"train": 100, "validation": 100, "test": 50},
  "train": {"epochs": 1}, "arch": {"hidden_dims": [8]}})";
  }
  CHECK(run_in(tmp.path, "train --config cfg8.json").exit_code == 5);
}

TEST_CASE("cli help enumerates configuration surface") {
  TempDir tmp;
  const std::string cmd = std::string(cli_path()) + " train --help > " +
                          (tmp.path / "help.txt").string() + " 2>&1";
  REQUIRE(std::system(cmd.c_str()) == 0);
  const std::string help = slurp(tmp.path / "help.txt");
  for (const char* token : {"--config", "--seed", "--scenario", "--epochs", "170",
                            "--out", "RFM_RADAR_OUT"}) {
    CHECK(help.find(token) != std::string::npos);
  }
}
