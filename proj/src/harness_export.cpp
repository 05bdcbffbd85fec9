#include <cstdio>
#include <fstream>
#include <sstream>

#include "rfmdet/dataset_io.hpp"
#include "rfmdet/harness.hpp"

namespace rfmdet {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

const char* kCurveColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c",
                              "#d62728", "#9467bd", "#8c564b"};

}  // namespace

void write_pd_curves_csv(std::span<const PdCurve> curves,
                         const std::filesystem::path& path) {
  std::string out = "detector,scenario,doppler_bin,snr_db,pd,trials,ci95_halfwidth\n";
  for (const PdCurve& c : curves) {
    for (std::size_t i = 0; i < c.snr_grid_db.size(); ++i) {
      out += std::string(detector_name(c.detector)) + "," + c.scenario + "," +
             fmt(c.doppler_bin) + "," + fmt(c.snr_grid_db[i]) + "," + fmt(c.pd[i]) +
             "," + std::to_string(c.trials_per_point) + "," +
             fmt(c.ci95_halfwidth[i]) + "\n";
    }
  }
  atomic_write_file(path, out);
}

std::vector<PdCurve> read_pd_curves_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv");
  std::vector<PdCurve> curves;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 7) throw std::runtime_error("malformed pd_curve row: " + line);
    const auto kind = detector_from_name(f[0]);
    if (!kind) throw std::runtime_error("unknown detector in csv: " + f[0]);
    const double doppler = std::stod(f[2]);
    if (curves.empty() || curves.back().detector != *kind ||
        curves.back().scenario != f[1] || curves.back().doppler_bin != doppler) {
      PdCurve c;
      c.detector = *kind;
      c.scenario = f[1];
      c.doppler_bin = doppler;
      c.trials_per_point = std::stoull(f[5]);
      curves.push_back(std::move(c));
    }
    curves.back().snr_grid_db.push_back(std::stod(f[3]));
    curves.back().pd.push_back(std::stod(f[4]));
    curves.back().ci95_halfwidth.push_back(std::stod(f[6]));
  }
  return curves;
}

void write_doppler_maps_csv(std::span<const DopplerMap> maps,
                            const std::filesystem::path& path) {
  std::string out = "detector,scenario,doppler_bin,snr_db,pd\n";
  for (const DopplerMap& m : maps) {
    for (int bin = 0; bin < m.n_bins; ++bin) {
      for (std::size_t si = 0; si < m.snr_grid_db.size(); ++si) {
        out += std::string(detector_name(m.detector)) + "," + m.scenario + "," +
               std::to_string(bin) + "," + fmt(m.snr_grid_db[si]) + "," +
               fmt(m.at(bin, si)) + "\n";
      }
    }
  }
  atomic_write_file(path, out);
}

void write_bench_csv(const BenchResult& result, const std::filesystem::path& path) {
  std::string out = "detector,mode,mean_ms,samples_per_snr,snr_points,reference_ms_from_paper\n";
  for (const BenchEntry& e : result.entries) {
    out += std::string(detector_name(e.detector)) + "," + e.mode + "," + fmt(e.mean_ms) +
           "," + std::to_string(e.samples_per_snr) + "," + std::to_string(e.snr_points) +
           "," + (e.reference_ms ? fmt_short(*e.reference_ms) : std::string()) + "\n";
  }
  atomic_write_file(path, out);
}

void write_thresholds_csv(const DetectorSuite& suite,
                          std::span<const Threshold> thresholds,
                          const std::filesystem::path& path) {
  std::string out = "detector,lambda,pfa,calibration_size,source\n";
  for (std::size_t i = 0; i < suite.size(); ++i) {
    const Threshold& t = thresholds[i];
    out += std::string(suite[i]->name()) + "," + fmt(t.lambda) + "," +
           fmt(t.pfa_target) + "," + std::to_string(t.calibration_size) + "," +
           (t.source == ThresholdSource::kEmpiricalQuantile ? "empirical_quantile"
                                                            : "analytic") +
           "\n";
  }
  atomic_write_file(path, out);
}

void write_pd_curves_svg(std::span<const PdCurve> curves,
                         const std::filesystem::path& path) {
  constexpr double kW = 640, kH = 480;
  constexpr double kL = 60, kR = 20, kT = 20, kB = 45;
  const double x_min = -20, x_max = 20;
  auto px = [&](double snr) {
    return kL + (snr - x_min) / (x_max - x_min) * (kW - kL - kR);
  };
  auto py = [&](double pd) { return kT + (1.0 - pd) * (kH - kT - kB); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"480\" "
       "viewBox=\"0 0 640 480\">\n";
  s += "<rect width=\"640\" height=\"480\" fill=\"white\"/>\n";
  for (int g = 0; g <= 10; ++g) {
    const double y = py(g / 10.0);
    s += "<line x1=\"" + fmt_short(kL) + "\" y1=\"" + fmt_short(y) + "\" x2=\"" +
         fmt_short(kW - kR) + "\" y2=\"" + fmt_short(y) +
         "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + fmt_short(kL - 8) + "\" y=\"" + fmt_short(y + 4) +
         "\" font-size=\"11\" text-anchor=\"end\">" + fmt_short(g / 10.0) + "</text>\n";
  }
  for (int snr = -20; snr <= 20; snr += 5) {
    const double x = px(snr);
    s += "<line x1=\"" + fmt_short(x) + "\" y1=\"" + fmt_short(kT) + "\" x2=\"" +
         fmt_short(x) + "\" y2=\"" + fmt_short(kH - kB) +
         "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    s += "<text x=\"" + fmt_short(x) + "\" y=\"" + fmt_short(kH - kB + 16) +
         "\" font-size=\"11\" text-anchor=\"middle\">" + std::to_string(snr) +
         "</text>\n";
  }
  s += "<text x=\"" + fmt_short((kL + kW - kR) / 2) + "\" y=\"" + fmt_short(kH - 8) +
       "\" font-size=\"13\" text-anchor=\"middle\">SNR (dB)</text>\n";
  s += "<text x=\"16\" y=\"" + fmt_short((kT + kH - kB) / 2) +
       "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       fmt_short((kT + kH - kB) / 2) + ")\">Pd</text>\n";

  std::size_t color_idx = 0;
  double legend_y = kT + 14;
  for (const PdCurve& c : curves) {
    const char* color = kCurveColors[color_idx % 6];
    ++color_idx;
    s += "<polyline fill=\"none\" stroke=\"";
    s += color;
    s += "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < c.snr_grid_db.size(); ++i) {
      s += fmt_short(px(c.snr_grid_db[i])) + "," + fmt_short(py(c.pd[i])) + " ";
    }
    s += "\"/>\n";
    s += "<text x=\"" + fmt_short(kL + 10) + "\" y=\"" + fmt_short(legend_y) +
         "\" font-size=\"12\" fill=\"" + color + "\">" +
         std::string(detector_name(c.detector)) + " (" + c.scenario + ")</text>\n";
    legend_y += 15;
  }
  s += "</svg>\n";
  atomic_write_file(path, s);
}

void write_doppler_map_svg(const DopplerMap& map, const std::filesystem::path& path) {
  constexpr double kCell = 26, kL = 80, kT = 40;
  const std::size_t cols = map.snr_grid_db.size();
  const double w = kL + cols * kCell + 80;
  const double h = kT + map.n_bins * kCell + 50;
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt_short(w) +
       "\" height=\"" + fmt_short(h) + "\">\n";
  s += "<rect width=\"" + fmt_short(w) + "\" height=\"" + fmt_short(h) +
       "\" fill=\"white\"/>\n";
  s += "<text x=\"" + fmt_short(kL) + "\" y=\"20\" font-size=\"13\">" +
       std::string(detector_name(map.detector)) + " (" + map.scenario + ")</text>\n";
  for (int bin = 0; bin < map.n_bins; ++bin) {
    for (std::size_t si = 0; si < cols; ++si) {
      const double v = map.at(bin, si);
      const int level = static_cast<int>(255.0 * (1.0 - v));
      char color[10];
      std::snprintf(color, sizeof(color), "#%02x%02xff", level, level);
      s += "<rect x=\"" + fmt_short(kL + si * kCell) + "\" y=\"" +
           fmt_short(kT + bin * kCell) + "\" width=\"" + fmt_short(kCell) +
           "\" height=\"" + fmt_short(kCell) + "\" fill=\"" + color +
           "\" stroke=\"#ffffff\"/>\n";
    }
    s += "<text x=\"" + fmt_short(kL - 8) + "\" y=\"" +
         fmt_short(kT + bin * kCell + kCell / 2 + 4) +
         "\" font-size=\"11\" text-anchor=\"end\">" + std::to_string(bin) + "</text>\n";
  }
  for (std::size_t si = 0; si < cols; ++si) {
    s += "<text x=\"" + fmt_short(kL + si * kCell + kCell / 2) + "\" y=\"" +
         fmt_short(kT + map.n_bins * kCell + 16) +
         "\" font-size=\"11\" text-anchor=\"middle\">" + fmt_short(map.snr_grid_db[si]) +
         "</text>\n";
  }
  s += "<text x=\"" + fmt_short(kL + cols * kCell / 2) + "\" y=\"" + fmt_short(h - 10) +
       "\" font-size=\"12\" text-anchor=\"middle\">SNR (dB)</text>\n";
  s += "<text x=\"18\" y=\"" + fmt_short(kT + map.n_bins * kCell / 2) +
       "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 18 " +
       fmt_short(kT + map.n_bins * kCell / 2) + ")\">Doppler bin</text>\n";
  s += "</svg>\n";
  atomic_write_file(path, s);
}

}  // namespace rfmdet
