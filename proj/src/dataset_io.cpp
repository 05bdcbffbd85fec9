#include "rfmdet/dataset_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "RFD1/RFN1 serialization assumes a little-endian host");

namespace rfmdet {

namespace {

constexpr char kMagic[4] = {'R', 'F', 'D', '1'};
constexpr std::uint32_t kVersion = 1;

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
  if (!in) throw std::runtime_error("truncated dataset file");
  return v;
}

std::uint8_t split_tag(Split s) {
  switch (s) {
    case Split::kTrain: return 0;
    case Split::kValidation: return 1;
    case Split::kTest: return 2;
    case Split::kSecondary: return 3;
  }
  throw std::logic_error("unknown split");
}

Split split_from_tag(std::uint8_t t) {
  switch (t) {
    case 0: return Split::kTrain;
    case 1: return Split::kValidation;
    case 2: return Split::kTest;
    case 3: return Split::kSecondary;
  }
  throw std::runtime_error("unknown split tag in dataset file");
}

nlohmann::json config_to_json(const ScenarioConfig& cfg) {
  return nlohmann::json{
      {"n_pulses", cfg.n_pulses},
      {"rho", cfg.rho},
      {"clutter", cfg.clutter.compound ? "compound" : "gaussian"},
      {"mu", cfg.clutter.texture_shape},
      {"cnr", cfg.cnr},
      {"snr_mode", cfg.snr_mode == SnrMode::kWhitened ? "whitened" : "literal"},
      {"seed", cfg.seed},
  };
}

ScenarioConfig config_from_json(const nlohmann::json& j) {
  ScenarioConfig cfg;
  cfg.n_pulses = j.at("n_pulses").get<int>();
  cfg.rho = j.at("rho").get<double>();
  const std::string kind = j.at("clutter").get<std::string>();
  const double mu = j.at("mu").get<double>();
  cfg.clutter = kind == "compound" ? ClutterKind::compound_gaussian(mu)
                                   : ClutterKind::gaussian();
  cfg.cnr = j.at("cnr").get<double>();
  cfg.snr_mode = j.at("snr_mode").get<std::string>() == "literal"
                     ? SnrMode::kLiteralPaper
                     : SnrMode::kWhitened;
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

}  // namespace

std::string split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
    case Split::kSecondary: return "secondary";
  }
  throw std::logic_error("unknown split");
}

Split split_from_name(const std::string& name) {
  for (Split s : {Split::kTrain, Split::kValidation, Split::kTest, Split::kSecondary}) {
    if (split_name(s) == name) return s;
  }
  throw std::runtime_error("unknown split name: " + name);
}

void atomic_write_file(const std::filesystem::path& path, const std::string& contents) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::string out;
  out.reserve(31 + ds.x.size() * sizeof(float));
  out.append(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.cols / 2));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ds.cols));
  put<std::uint64_t>(out, ds.rows);
  put<std::uint64_t>(out, ds.creation_seed);
  put<std::uint8_t>(out, split_tag(ds.split));
  for (double v : ds.x) put<float>(out, static_cast<float>(v));
  atomic_write_file(path, out);

  const nlohmann::json meta{
      {"config", config_to_json(ds.config)},
      {"split", split_name(ds.split)},
      {"rows", ds.rows},
  };
  std::filesystem::path meta_path = path;
  meta_path += ".meta.json";
  atomic_write_file(meta_path, meta.dump(2) + "\n");
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("bad magic in " + path.string());
  }
  const auto version = take<std::uint32_t>(in);
  if (version != kVersion) {
    throw std::runtime_error("unsupported dataset version " + std::to_string(version));
  }
  const auto n = take<std::uint32_t>(in);
  const auto d = take<std::uint32_t>(in);
  if (d != 2 * n) throw std::runtime_error("dataset header violates D = 2N");
  Dataset ds;
  ds.rows = take<std::uint64_t>(in);
  ds.cols = d;
  ds.creation_seed = take<std::uint64_t>(in);
  ds.split = split_from_tag(take<std::uint8_t>(in));
  ds.x.resize(ds.rows * ds.cols);
  for (auto& v : ds.x) v = take<float>(in);

  std::filesystem::path meta_path = path;
  meta_path += ".meta.json";
  std::ifstream meta_in(meta_path);
  if (meta_in) {
    nlohmann::json meta = nlohmann::json::parse(meta_in);
    ds.config = config_from_json(meta.at("config"));
  } else {
    ds.config.n_pulses = static_cast<int>(n);
    ds.config.seed = ds.creation_seed;
  }
  return ds;
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  const std::size_t n = ds.cols / 2;
  std::string out;
  for (std::size_t j = 0; j < n; ++j) {
    out += "re_" + std::to_string(j) + ",";
  }
  for (std::size_t j = 0; j < n; ++j) {
    out += "im_" + std::to_string(j);
    out += (j + 1 < n) ? "," : "";
  }
  out += "\n";
  char buf[64];
  for (std::size_t i = 0; i < ds.rows; ++i) {
    const double* row = ds.row(i);
    for (std::size_t j = 0; j < ds.cols; ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", row[j]);
      out += buf;
      out += (j + 1 < ds.cols) ? "," : "";
    }
    out += "\n";
  }
  atomic_write_file(path, out);
}

}  // namespace rfmdet
