// Python bindings for the core operations: covariance kernel, scenario
// generation, classical detector statistics, and the learned flow detector.

#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rfmdet/classical_detectors.hpp"
#include "rfmdet/drfm_detector.hpp"
#include "rfmdet/flow_net.hpp"
#include "rfmdet/harness.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace rfmdet;

namespace {

using ComplexArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;
using RealArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

ComplexVector to_cvector(const ComplexArray& a) {
  if (a.ndim() != 1) throw std::invalid_argument("expected a 1-d complex array");
  return ComplexVector(a.data(), a.data() + a.shape(0));
}

HermitianMatrix to_hermitian(const ComplexArray& a) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) {
    throw std::invalid_argument("expected a square complex matrix");
  }
  const int n = static_cast<int>(a.shape(0));
  return HermitianMatrix::from_entries(
      n, std::vector<ComplexScalar>(a.data(), a.data() + n * n));
}

std::vector<ComplexVector> to_rows(const ComplexArray& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d complex array");
  std::vector<ComplexVector> rows(a.shape(0));
  for (py::ssize_t i = 0; i < a.shape(0); ++i) {
    rows[i].assign(a.data() + i * a.shape(1), a.data() + (i + 1) * a.shape(1));
  }
  return rows;
}

py::array from_hermitian(const HermitianMatrix& m) {
  ComplexArray out({m.dim(), m.dim()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

py::array from_cvector(const ComplexVector& v) {
  ComplexArray out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

ScenarioConfig make_config(int n_pulses, double rho, const std::string& clutter,
                           double mu, double cnr, const std::string& snr_mode,
                           std::uint64_t seed) {
  ScenarioConfig cfg;
  cfg.n_pulses = n_pulses;
  cfg.rho = rho;
  if (clutter == "compound") {
    cfg.clutter = ClutterKind::compound_gaussian(mu);
  } else if (clutter == "gaussian") {
    cfg.clutter = ClutterKind::gaussian();
  } else {
    throw std::invalid_argument("clutter must be 'gaussian' or 'compound'");
  }
  cfg.cnr = cnr;
  if (snr_mode == "whitened") {
    cfg.snr_mode = SnrMode::kWhitened;
  } else if (snr_mode == "literal") {
    cfg.snr_mode = SnrMode::kLiteralPaper;
  } else {
    throw std::invalid_argument("snr_mode must be 'whitened' or 'literal'");
  }
  cfg.seed = seed;
  return cfg;
}

// Thin façade coupling a scenario with draw helpers.
class PyScenario {
 public:
  PyScenario(int n_pulses, double rho, const std::string& clutter, double mu,
             double cnr, const std::string& snr_mode, std::uint64_t seed)
      : cfg_(make_config(n_pulses, rho, clutter, mu, cnr, snr_mode, seed)),
        sampler_(cfg_) {}

  py::array clutter_cov() const { return from_hermitian(sampler_.covariance().clutter); }
  py::array total_cov() const { return from_hermitian(sampler_.covariance().total); }
  double noise_power() const { return sampler_.covariance().noise_power; }

  py::array h0_embedded(std::size_t count, std::uint64_t stream) const {
    RealArray out({static_cast<py::ssize_t>(count),
                   static_cast<py::ssize_t>(cfg_.data_dim())});
    for (std::size_t i = 0; i < count; ++i) {
      RandomStream rng =
          RandomStream::derive(cfg_.seed, StreamPurpose::kGeneric, mix_key(stream, i));
      const std::vector<double> x = embed_real(sampler_.sample_h0(rng));
      std::copy(x.begin(), x.end(), out.mutable_data() + i * cfg_.data_dim());
    }
    return out;
  }

  py::array observations(const std::string& hypothesis, double snr_db,
                         double doppler_bin, std::size_t count,
                         std::uint64_t stream) const {
    const Hypothesis hyp = hypothesis == "h1" ? Hypothesis::kH1 : Hypothesis::kH0;
    ComplexArray out({static_cast<py::ssize_t>(count),
                      static_cast<py::ssize_t>(cfg_.n_pulses)});
    for (std::size_t i = 0; i < count; ++i) {
      RandomStream rng =
          RandomStream::derive(cfg_.seed, StreamPurpose::kGeneric, mix_key(stream, i));
      const Observation obs = sampler_.sample(hyp, snr_db, doppler_bin, rng);
      std::copy(obs.y.begin(), obs.y.end(), out.mutable_data() + i * cfg_.n_pulses);
    }
    return out;
  }

  py::array secondary(std::size_t k, std::uint64_t stream) const {
    RandomStream rng = RandomStream::derive(cfg_.seed, StreamPurpose::kSecondary, stream);
    const SecondaryData sd = sampler_.sample_secondary(k, rng);
    ComplexArray out({static_cast<py::ssize_t>(sd.z.size()),
                      static_cast<py::ssize_t>(cfg_.n_pulses)});
    for (std::size_t i = 0; i < sd.z.size(); ++i) {
      std::copy(sd.z[i].begin(), sd.z[i].end(), out.mutable_data() + i * cfg_.n_pulses);
    }
    return out;
  }

  double alpha_magnitude(double snr_db, double doppler_bin) const {
    return sampler_.alpha_magnitude(snr_db, doppler_bin);
  }

 private:
  ScenarioConfig cfg_;
  ScenarioSampler sampler_;
};

// Trained velocity-field model with transport and scoring entry points.
class PyFlowModel {
 public:
  explicit PyFlowModel(MlpParams params) : params_(std::move(params)) {}

  static PyFlowModel load(const std::string& path) {
    return PyFlowModel(load_checkpoint(path).params);
  }

  static PyFlowModel train_on(const RealArray& x, std::vector<int> hidden_dims,
                              double learning_rate, int batch_size, int epochs,
                              std::uint64_t seed) {
    if (x.ndim() != 2) throw std::invalid_argument("expected a 2-d data matrix");
    Dataset ds;
    ds.rows = static_cast<std::size_t>(x.shape(0));
    ds.cols = static_cast<std::size_t>(x.shape(1));
    ds.x.assign(x.data(), x.data() + ds.rows * ds.cols);
    NetArchitecture arch;
    arch.data_dim = static_cast<int>(ds.cols);
    arch.hidden_dims = std::move(hidden_dims);
    TrainConfig cfg;
    cfg.learning_rate = learning_rate;
    cfg.batch_size = batch_size;
    cfg.epochs = epochs;
    cfg.seed = seed;
    auto [params, report] = train(ds, arch, cfg);
    PyFlowModel model(std::move(params));
    model.epoch_loss_ = report.epoch_mean_loss;
    return model;
  }

  void save(const std::string& path) const {
    CheckpointMeta meta;
    meta.arch = params_.arch;
    meta.final_epoch_loss = epoch_loss_.empty() ? 0.0 : epoch_loss_.back();
    meta.epoch_loss_digest =
        fnv1a64(epoch_loss_.data(), epoch_loss_.size() * sizeof(double));
    meta.epochs_trained = static_cast<int>(epoch_loss_.size());
    save_checkpoint(params_, meta, path);
  }

  py::array forward_at(const RealArray& x, double t) const {
    auto [rows, data] = as_matrix(x);
    RealArray out({rows, static_cast<py::ssize_t>(params_.arch.data_dim)});
    const std::vector<double> times(rows, t);
    forward_batch(params_, data, times.data(), rows, out.mutable_data());
    return out;
  }

  py::array inverse(const RealArray& x, int steps) const {
    auto [rows, data] = as_matrix(x);
    IntegrationConfig cfg;
    cfg.steps = steps;
    const std::vector<double> z = inverse_map_batch(params_, data, rows, cfg);
    RealArray out({rows, static_cast<py::ssize_t>(params_.arch.data_dim)});
    std::copy(z.begin(), z.end(), out.mutable_data());
    return out;
  }

  py::array scores(const RealArray& x, int steps) const {
    auto [rows, data] = as_matrix(x);
    IntegrationConfig cfg;
    cfg.steps = steps;
    const std::vector<double> s = anomaly_scores(params_, data, rows, cfg);
    RealArray out(rows);
    std::copy(s.begin(), s.end(), out.mutable_data());
    return out;
  }

  int data_dim() const { return params_.arch.data_dim; }
  std::vector<int> hidden_dims() const { return params_.arch.hidden_dims; }
  std::vector<double> epoch_loss() const { return epoch_loss_; }
  std::uint64_t digest() const { return params_.digest(); }

 private:
  std::pair<py::ssize_t, const double*> as_matrix(const RealArray& x) const {
    if (x.ndim() == 1) {
      if (x.shape(0) != params_.arch.data_dim) {
        throw std::invalid_argument("input width does not match the model");
      }
      return {1, x.data()};
    }
    if (x.ndim() != 2 || x.shape(1) != params_.arch.data_dim) {
      throw std::invalid_argument("input width does not match the model");
    }
    return {x.shape(0), x.data()};
  }

  MlpParams params_;
  std::vector<double> epoch_loss_;
};

}  // namespace

PYBIND11_MODULE(_rfmdet, m) {
  m.doc() = "Radar detection core: covariance kernel, clutter scenarios, classical "
            "detector statistics, and the rectified-flow detector";

  m.def("toeplitz_covariance",
        [](double rho, int n) { return from_hermitian(toeplitz_covariance(rho, n)); },
        "rho"_a, "n"_a);
  m.def("cholesky",
        [](const ComplexArray& a) {
          const LowerTriangular l = cholesky(to_hermitian(a));
          ComplexArray out({l.dim(), l.dim()});
          for (int i = 0; i < l.dim(); ++i) {
            for (int j = 0; j < l.dim(); ++j) {
              out.mutable_data()[i * l.dim() + j] = l(i, j);
            }
          }
          return out;
        },
        "m"_a, "Lower Cholesky factor; raises ValueError for indefinite input");
  m.def("solve_hermitian",
        [](const ComplexArray& a, const ComplexArray& b) {
          return from_cvector(solve_hermitian(to_hermitian(a), to_cvector(b)));
        },
        "m"_a, "b"_a);
  m.def("sesquilinear",
        [](const ComplexArray& a, const ComplexArray& m_, const ComplexArray& b) {
          return sesquilinear(to_cvector(a), to_hermitian(m_), to_cvector(b));
        },
        "a"_a, "m"_a, "b"_a, "a^H m b");
  m.def("steering_vector",
        [](double d, int n) { return from_cvector(steering_vector(d, n)); },
        "doppler_bin"_a, "n"_a);
  m.def("embed_real",
        [](const ComplexArray& y) {
          const std::vector<double> x = embed_real(to_cvector(y));
          RealArray out(static_cast<py::ssize_t>(x.size()));
          std::copy(x.begin(), x.end(), out.mutable_data());
          return out;
        },
        "y"_a);
  m.def("unembed_real",
        [](const RealArray& x) {
          return from_cvector(
              unembed_real(std::span<const double>(x.data(), x.shape(0))));
        },
        "x"_a);

  m.def("mf_statistic",
        [](const ComplexArray& y, const ComplexArray& p, const ComplexArray& sigma) {
          return mf_statistic(to_cvector(y), to_cvector(p), to_hermitian(sigma));
        },
        "y"_a, "p"_a, "sigma"_a);
  m.def("nmf_statistic",
        [](const ComplexArray& y, const ComplexArray& p, const ComplexArray& sigma) {
          return nmf_statistic(to_cvector(y), to_cvector(p), to_hermitian(sigma));
        },
        "y"_a, "p"_a, "sigma"_a);
  m.def("scm",
        [](const ComplexArray& z) { return from_hermitian(scm(to_rows(z)).matrix); },
        "z"_a, "Sample covariance of the rows");
  m.def("tyler_fp",
        [](const ComplexArray& z, double tol, int max_iter) {
          TylerOptions opts;
          opts.tol = tol;
          opts.max_iter = max_iter;
          const CovEstimate est = tyler_fp(to_rows(z), opts);
          return py::make_tuple(from_hermitian(est.matrix), est.iterations);
        },
        "z"_a, "tol"_a = 1e-6, "max_iter"_a = 100,
        "Trace-normalized fixed-point estimate and its iteration count");
  m.def("amf_scm",
        [](const ComplexArray& y, const ComplexArray& p, const ComplexArray& z) {
          return amf_scm(to_cvector(y), to_cvector(p), to_rows(z));
        },
        "y"_a, "p"_a, "secondary"_a);
  m.def("anmf_scm",
        [](const ComplexArray& y, const ComplexArray& p, const ComplexArray& z) {
          return anmf_scm(to_cvector(y), to_cvector(p), to_rows(z));
        },
        "y"_a, "p"_a, "secondary"_a);
  m.def("anmf_fp",
        [](const ComplexArray& y, const ComplexArray& p, const ComplexArray& z) {
          return anmf_fp(to_cvector(y), to_cvector(p), to_rows(z));
        },
        "y"_a, "p"_a, "secondary"_a);

  m.def("mf_threshold_analytic", &mf_threshold_analytic, "pfa"_a);
  m.def("nmf_threshold_analytic", &nmf_threshold_analytic, "pfa"_a, "n"_a);
  m.def("mf_pd_analytic", &mf_pd_analytic, "snr_linear"_a, "pfa"_a);
  m.def("marcum_q1", &marcum_q1, "a"_a, "b"_a);
  m.def("calibrate_threshold",
        [](const RealArray& scores, double pfa) {
          return calibrate_threshold(
                     std::span<const double>(scores.data(), scores.shape(0)), pfa)
              .lambda;
        },
        "scores"_a, "pfa"_a,
        "Empirical quantile threshold: the ceil((1-pfa) M)-th smallest score");

  py::class_<PyScenario>(m, "Scenario",
                         "Synthetic clutter scenario with deterministic draw streams")
      .def(py::init<int, double, const std::string&, double, double,
                    const std::string&, std::uint64_t>(),
           "n_pulses"_a = 16, "rho"_a = 0.5, "clutter"_a = "gaussian", "mu"_a = 1.0,
           "cnr"_a = 1.0, "snr_mode"_a = "whitened", "seed"_a = 0x5eed)
      .def("clutter_cov", &PyScenario::clutter_cov)
      .def("total_cov", &PyScenario::total_cov)
      .def("noise_power", &PyScenario::noise_power)
      .def("h0_embedded", &PyScenario::h0_embedded, "count"_a, "stream"_a = 0,
           "H0 draws embedded as rows [Re, Im] of width 2N")
      .def("observations", &PyScenario::observations, "hypothesis"_a, "snr_db"_a = 0.0,
           "doppler_bin"_a = 0.0, "count"_a = 1, "stream"_a = 0)
      .def("secondary", &PyScenario::secondary, "k"_a = 0, "stream"_a = 0)
      .def("alpha_magnitude", &PyScenario::alpha_magnitude, "snr_db"_a, "doppler_bin"_a);

  py::class_<PyFlowModel>(m, "FlowModel", "Velocity-field model over embedded data")
      .def_static("load", &PyFlowModel::load, "path"_a)
      .def_static("train", &PyFlowModel::train_on, "x"_a,
                  "hidden_dims"_a = std::vector<int>{256, 256},
                  "learning_rate"_a = 1e-3, "batch_size"_a = 128, "epochs"_a = 170,
                  "seed"_a = 1)
      .def("save", &PyFlowModel::save, "path"_a)
      .def("forward", &PyFlowModel::forward_at, "x"_a, "t"_a)
      .def("inverse_map", &PyFlowModel::inverse, "x"_a, "steps"_a = 64)
      .def("anomaly_scores", &PyFlowModel::scores, "x"_a, "steps"_a = 64)
      .def_property_readonly("data_dim", &PyFlowModel::data_dim)
      .def_property_readonly("hidden_dims", &PyFlowModel::hidden_dims)
      .def_property_readonly("epoch_loss", &PyFlowModel::epoch_loss)
      .def_property_readonly("digest", &PyFlowModel::digest);

  py::register_exception<NonPositiveDefinite>(m, "NonPositiveDefiniteError",
                                              PyExc_ValueError);
  py::register_exception<NotConverged>(m, "NotConvergedError", PyExc_RuntimeError);
}
